use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid tree: {0}")]
    InvalidTree(String),

    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    /// Raised before any enumeration would exceed `2^cap` terms.
    #[error("enumeration over {size} vertices exceeds the cap of {cap}")]
    EnumerationCap { size: usize, cap: usize },

    #[error("configuration domain mismatch: {0}")]
    DomainMismatch(String),

    #[error("boundary field has no entry for edge ending at vertex {0}")]
    MissingField(usize),

    #[error("expected strictly positive value, got {0}")]
    NonPositive(f64),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("invalid scan grid: {0}")]
    InvalidGrid(String),

    #[error("{path}: {source}")]
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
