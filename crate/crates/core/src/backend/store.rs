use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{BackendError, ModelResponse, Task};
use crate::corpus::RecordId;

/// One provider exchange as archived in the run store.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoreEntry {
    pub timestamp: String,
    pub record_id: Option<RecordId>,
    pub task: Task,
    pub provider: String,
    pub prompt_digest: String,
    pub params_digest: String,
    pub cached: bool,
    pub response: ModelResponse,
}

/// Append-only JSON-lines archive. Writers are serialised by a mutex and
/// each entry is written with a single `write_all` followed by a flush.
#[derive(Debug)]
pub struct RunStore {
    path: PathBuf,
    file: Mutex<File>,
}

fn store_err(e: impl std::fmt::Display) -> BackendError {
    BackendError::Store(e.to_string())
}

impl RunStore {
    pub fn open(path: impl AsRef<Path>) -> Result<Self, BackendError> {
        let path = path.as_ref().to_path_buf();
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(store_err)?;
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(store_err)?;
        Ok(RunStore {
            path,
            file: Mutex::new(file),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&self, entry: &StoreEntry) -> Result<(), BackendError> {
        let mut line = serde_json::to_string(entry).map_err(store_err)?;
        line.push('\n');
        let mut f = self.file.lock().map_err(store_err)?;
        f.write_all(line.as_bytes()).map_err(store_err)?;
        f.flush().map_err(store_err)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Vec<StoreEntry>, BackendError> {
        let f = File::open(path).map_err(store_err)?;
        let mut out = Vec::new();
        for (n, line) in BufReader::new(f).lines().enumerate() {
            let line = line.map_err(store_err)?;
            if line.trim().is_empty() {
                continue;
            }
            out.push(
                serde_json::from_str(&line)
                    .map_err(|e| store_err(format!("line {}: {e}", n + 1)))?,
            );
        }
        Ok(out)
    }
}
