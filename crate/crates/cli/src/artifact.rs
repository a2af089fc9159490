//! Artifact files: staged writes with a `.partial` suffix, digest headers
//! and loaders for the inputs every subcommand shares.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use afortiori::corpus::{from_jsonl, parse_dataset, ArgumentRecord, Delimiter};
use afortiori::digest::sha256_hex;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{fail, Classify, ExitKind};

pub const TOOL: &str = concat!("afortiori ", env!("CARGO_PKG_VERSION"));

/// Common header of every JSON artifact.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Header {
    pub kind: String,
    pub config_digest: String,
    pub tool: String,
}

impl Header {
    pub fn new(kind: &str, config_digest: &str) -> Self {
        Header {
            kind: kind.to_string(),
            config_digest: config_digest.to_string(),
            tool: TOOL.to_string(),
        }
    }
}

/// `x.json` becomes `x.json.partial`.
pub fn partial_path(path: &Path) -> PathBuf {
    let mut s: OsString = path.as_os_str().to_owned();
    s.push(".partial");
    PathBuf::from(s)
}

/// `x.jsonl` gets its header in `x.jsonl.meta.json`.
pub fn meta_path(path: &Path) -> PathBuf {
    let mut s: OsString = path.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

/// Files are written under their `.partial` name and renamed together on
/// [`Staging::commit`]. A failed command leaves the partial files behind.
#[derive(Debug, Default)]
pub struct Staging {
    files: Vec<(PathBuf, PathBuf)>,
}

impl Staging {
    pub fn write(&mut self, path: &Path, bytes: impl AsRef<[u8]>) -> anyhow::Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| fail(ExitKind::Data, format!("{}: {e}", dir.display())))?;
        }
        let partial = partial_path(path);
        fs::write(&partial, bytes).map_err(|e| fail(ExitKind::Data, format!("{}: {e}", partial.display())))?;
        self.files.push((partial, path.to_path_buf()));
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, path: &Path, value: &T) -> anyhow::Result<()> {
        let mut text = serde_json::to_string_pretty(value).data()?;
        text.push('\n');
        self.write(path, text)
    }

    pub fn commit(self) -> anyhow::Result<()> {
        for (partial, path) in self.files {
            fs::rename(&partial, &path).map_err(|e| fail(ExitKind::Data, format!("{}: {e}", path.display())))?;
        }
        Ok(())
    }
}

pub fn read_text(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).map_err(|e| fail(ExitKind::Data, format!("{}: {e}", path.display())))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    serde_json::from_str(&read_text(path)?).map_err(|e| fail(ExitKind::Data, format!("{}: {e}", path.display())))
}

pub fn file_digest(path: &Path) -> anyhow::Result<String> {
    let bytes = fs::read(path).map_err(|e| fail(ExitKind::Data, format!("{}: {e}", path.display())))?;
    Ok(sha256_hex(bytes))
}

/// Canonical JSON lines when the name ends in `.jsonl`, the delimited
/// format otherwise. Rejected rows are logged and skipped.
pub fn load_corpus(path: &Path) -> anyhow::Result<Vec<ArgumentRecord>> {
    if path.extension().is_some_and(|e| e == "jsonl") {
        return from_jsonl(&read_text(path)?).map_err(|e| fail(ExitKind::Data, format!("{}: {e}", path.display())));
    }
    let file = fs::File::open(path).map_err(|e| fail(ExitKind::Data, format!("{}: {e}", path.display())))?;
    let parsed =
        parse_dataset(file, Delimiter::Auto).map_err(|e| fail(ExitKind::Data, format!("{}: {e}", path.display())))?;
    for r in &parsed.rejects {
        log::warn!("{}: row {} rejected: {}", path.display(), r.row, r.reason);
    }
    Ok(parsed.records)
}

/// Parsed JSON lines, one value per non-blank line.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> anyhow::Result<Vec<T>> {
    let text = read_text(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(line)
                .map_err(|e| fail(ExitKind::Data, format!("{}:{}: {e}", path.display(), i + 1)))?,
        );
    }
    Ok(out)
}

pub fn to_jsonl<T: Serialize>(items: &[T]) -> String {
    let mut out = String::new();
    for i in items {
        out.push_str(&serde_json::to_string(i).expect("serialisable"));
        out.push('\n');
    }
    out
}

/// A run directory or a results file, with the config digest of the run
/// that produced it when known.
#[derive(Debug)]
pub struct Predictions {
    pub results: Vec<Value>,
    pub config_digest: Option<String>,
    pub path: PathBuf,
}

pub fn load_predictions(path: &Path) -> anyhow::Result<Predictions> {
    let (results_path, manifest_path) = if path.is_dir() {
        (path.join("results.jsonl"), Some(path.join("manifest.json")))
    } else {
        let m = path.parent().map(|d| d.join("manifest.json"));
        (path.to_path_buf(), m)
    };
    let config_digest = match manifest_path.filter(|m| m.exists()) {
        Some(m) => {
            let v: Value = read_json(&m)?;
            v.pointer("/header/config_digest").and_then(Value::as_str).map(str::to_string)
        }
        None => None,
    };
    Ok(Predictions {
        results: read_jsonl(&results_path)?,
        config_digest,
        path: results_path,
    })
}

/// Shorthand used by commands that require an existing path.
pub fn must_exist(path: &Path) -> anyhow::Result<&Path> {
    if path.exists() {
        Ok(path)
    } else {
        Err(fail(ExitKind::Data, format!("{}: no such file or directory", path.display())))
    }
}

pub fn usage_err(msg: impl Into<String>) -> anyhow::Error {
    fail(ExitKind::Usage, msg)
}

pub fn classify_io<T>(r: std::io::Result<T>, path: &Path) -> anyhow::Result<T> {
    r.map_err(|e| format!("{}: {e}", path.display())).data()
}
