//! Exit classification. Every failure leaves the process with one line on
//! stderr that a script can parse.

use std::fmt;

use serde_json::json;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    Usage,
    Data,
    Provider,
}

impl ExitKind {
    pub fn code(self) -> i32 {
        match self {
            ExitKind::Usage => 1,
            ExitKind::Data => 2,
            ExitKind::Provider => 3,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ExitKind::Usage => "usage",
            ExitKind::Data => "data",
            ExitKind::Provider => "provider",
        }
    }
}

#[derive(Debug)]
pub struct Failure {
    pub kind: ExitKind,
    pub message: String,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Failure {}

pub fn fail(kind: ExitKind, message: impl Into<String>) -> anyhow::Error {
    Failure {
        kind,
        message: message.into(),
    }
    .into()
}

/// Tags an error with its exit class.
pub trait Classify<T> {
    fn kind(self, kind: ExitKind) -> anyhow::Result<T>;

    fn usage(self) -> anyhow::Result<T>
    where
        Self: Sized,
    {
        self.kind(ExitKind::Usage)
    }

    fn data(self) -> anyhow::Result<T>
    where
        Self: Sized,
    {
        self.kind(ExitKind::Data)
    }

    fn provider(self) -> anyhow::Result<T>
    where
        Self: Sized,
    {
        self.kind(ExitKind::Provider)
    }
}

impl<T, E: fmt::Display> Classify<T> for Result<T, E> {
    fn kind(self, kind: ExitKind) -> anyhow::Result<T> {
        self.map_err(|e| fail(kind, e.to_string()))
    }
}

/// Exit class of an error chain; unclassified errors count as data errors.
pub fn exit_kind(err: &anyhow::Error) -> ExitKind {
    err.chain()
        .find_map(|e| e.downcast_ref::<Failure>())
        .map(|f| f.kind)
        .unwrap_or(ExitKind::Data)
}

/// The single stderr line for `err`.
pub fn error_line(err: &anyhow::Error) -> String {
    let kind = exit_kind(err);
    let message = format!("{err:#}").replace(['\n', '\r'], " ");
    json!({ "error": { "kind": kind.as_str(), "code": kind.code(), "message": message } }).to_string()
}
