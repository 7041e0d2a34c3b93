use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: u64, message: String },

    /// Input data violates a documented invariant (score range, empty Q rows, ...).
    #[error("invalid data: {0}")]
    Data(String),

    /// Caller-supplied configuration or arguments are unusable.
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{kind} index {index} out of range (valid: 0..{len})")]
    Index {
        kind: &'static str,
        index: usize,
        len: usize,
    },

    #[error("shape mismatch: {0}")]
    Shape(String),

    /// NaN or infinity where only finite values are admitted.
    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
