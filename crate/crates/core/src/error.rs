use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("episode already finished; call reset before stepping")]
    EpisodeDone,

    #[error("invalid action {action} (action count {count})")]
    InvalidAction { action: usize, count: usize },

    #[error("maze side length must be at least 2, got {0}")]
    MazeTooSmall(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite loss ({loss}) in {context}")]
    NonFiniteLoss { loss: f64, context: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("agent '{0}' is not implemented")]
    NotImplemented(String),

    #[error("snapshot error: {0}")]
    Snapshot(String),

    #[error("malformed CSV {path}: {reason}")]
    Csv { path: PathBuf, reason: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
