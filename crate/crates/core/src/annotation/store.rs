use std::fs::{File, OpenOptions, TryLockError};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use super::AnnotationError;
use crate::evaluate::JudgmentRecord;

/// Append-only JSON-lines judgment store. Writers are serialised; readers
/// get a snapshot of everything appended so far. The file is locked for
/// the lifetime of the store so two services cannot share it.
#[derive(Debug)]
pub struct JudgmentStore {
    path: PathBuf,
    file: Mutex<File>,
    records: RwLock<Vec<JudgmentRecord>>,
}

impl JudgmentStore {
    pub fn open(path: impl AsRef<Path>) -> Result<Self, AnnotationError> {
        let path = path.as_ref().to_path_buf();
        let io = |e: std::io::Error| AnnotationError::Io {
            path: path.display().to_string(),
            source: e,
        };
        let file = OpenOptions::new().create(true).append(true).read(true).open(&path).map_err(io)?;
        match file.try_lock() {
            Ok(()) => {}
            Err(TryLockError::WouldBlock) => {
                return Err(AnnotationError::Locked(path.display().to_string()));
            }
            Err(TryLockError::Error(e)) => return Err(io(e)),
        }
        let records = read_judgments(&path)?;
        Ok(JudgmentStore {
            path,
            file: Mutex::new(file),
            records: RwLock::new(records),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn snapshot(&self) -> Vec<JudgmentRecord> {
        self.records.read().expect("store lock").clone()
    }

    /// Builds records under the writer lock, so versions computed from the
    /// current contents cannot race with another writer, then persists them.
    pub fn append_with<F>(&self, build: F) -> Result<Vec<JudgmentRecord>, AnnotationError>
    where
        F: FnOnce(&[JudgmentRecord]) -> Result<Vec<JudgmentRecord>, AnnotationError>,
    {
        let mut file = self.file.lock().expect("store lock");
        let new = {
            let current = self.records.read().expect("store lock");
            build(&current)?
        };
        let mut buf = String::new();
        for r in &new {
            buf.push_str(&serde_json::to_string(r).expect("judgment serialises"));
            buf.push('\n');
        }
        let io = |e: std::io::Error| AnnotationError::Io {
            path: self.path.display().to_string(),
            source: e,
        };
        file.write_all(buf.as_bytes()).map_err(io)?;
        file.sync_data().map_err(io)?;
        self.records.write().expect("store lock").extend(new.iter().cloned());
        Ok(new)
    }
}

/// Reads a judgment file. A missing file is an empty store.
pub fn read_judgments(path: &Path) -> Result<Vec<JudgmentRecord>, AnnotationError> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => {
            return Err(AnnotationError::Io {
                path: path.display().to_string(),
                source: e,
            })
        }
    };
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| AnnotationError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let r = serde_json::from_str(&line).map_err(|e| AnnotationError::Corrupt {
            path: path.display().to_string(),
            line: n + 1,
            message: e.to_string(),
        })?;
        out.push(r);
    }
    Ok(out)
}
