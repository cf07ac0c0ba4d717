//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("structure contains no alpha-carbon atoms")]
    EmptyStructure,

    #[error("range error: {0}")]
    Range(String),

    #[error("need at least {required} points for superposition, got {got}")]
    Underdetermined { required: usize, got: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("unsupported database version {found} (supported: {supported})")]
    Version { found: u64, supported: u64 },

    #[error("corrupt database: {0}")]
    Corruption(String),

    #[error("no usable data: {0}")]
    NoData(String),

    #[error("contract violation: {0}")]
    Contract(String),

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
