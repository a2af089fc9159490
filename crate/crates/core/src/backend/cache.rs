use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use super::{BackendError, ProviderReply};

/// Content-addressed reply cache. Keys are SHA-256 hex strings; each entry
/// is one JSON file. Concurrent requests for the same key, in this process
/// or another, are serialised so the provider is called at most once.
#[derive(Debug)]
pub struct ResponseCache {
    dir: PathBuf,
    locks: Mutex<HashMap<String, Arc<Mutex<()>>>>,
}

fn cache_err(e: impl std::fmt::Display) -> BackendError {
    BackendError::Cache(e.to_string())
}

impl ResponseCache {
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, BackendError> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir).map_err(cache_err)?;
        Ok(ResponseCache {
            dir,
            locks: Mutex::new(HashMap::new()),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    pub fn get(&self, key: &str) -> Result<Option<ProviderReply>, BackendError> {
        match fs::read_to_string(self.path(key)) {
            Ok(text) => serde_json::from_str(&text).map(Some).map_err(cache_err),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(cache_err(e)),
        }
    }

    /// Returns the cached reply, or computes, stores and returns a new one.
    /// The flag is true on a hit.
    pub fn get_or_insert_with<F>(&self, key: &str, compute: F) -> Result<(ProviderReply, bool), BackendError>
    where
        F: FnOnce() -> Result<ProviderReply, BackendError>,
    {
        let slot = {
            let mut locks = self.locks.lock().map_err(cache_err)?;
            locks.entry(key.to_string()).or_default().clone()
        };
        let _guard = slot.lock().map_err(cache_err)?;
        let lock_file = File::create(self.dir.join(format!("{key}.lock"))).map_err(cache_err)?;
        lock_file.lock().map_err(cache_err)?;

        if let Some(hit) = self.get(key)? {
            return Ok((hit, true));
        }
        let reply = compute()?;
        let tmp = self.dir.join(format!("{key}.tmp"));
        let mut f = OpenOptions::new()
            .create(true)
            .write(true)
            .truncate(true)
            .open(&tmp)
            .map_err(cache_err)?;
        f.write_all(serde_json::to_string_pretty(&reply).map_err(cache_err)?.as_bytes())
            .map_err(cache_err)?;
        f.sync_all().map_err(cache_err)?;
        fs::rename(&tmp, self.path(key)).map_err(cache_err)?;
        Ok((reply, false))
    }
}
