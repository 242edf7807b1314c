use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: io::Error,
    },

    #[error("invalid JSON on line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },

    #[error("title is empty after normalization")]
    EmptyTitle,

    /// A caller broke a documented precondition (id out of range, k > n, ...).
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("malformed graph file: {0}")]
    GraphFormat(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("checkpoint does not match input: {0}")]
    CheckpointMismatch(String),

    #[error("unknown output format {0:?}")]
    UnknownFormat(String),

    #[error("no records to aggregate")]
    EmptyAggregate,
}

impl Error {
    pub(crate) fn io(context: impl Into<String>, source: io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    pub(crate) fn io_path(action: &str, path: &std::path::Path, source: io::Error) -> Self {
        Error::io(format!("{action} {}", path.display()), source)
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
}

/// Paths that must exist before a command starts.
pub(crate) fn require_exists(path: &std::path::Path) -> Result<PathBuf> {
    if path == std::path::Path::new("-") || path.exists() {
        Ok(path.to_path_buf())
    } else {
        Err(Error::Config(format!(
            "input path {} does not exist",
            path.display()
        )))
    }
}
