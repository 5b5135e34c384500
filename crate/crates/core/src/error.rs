use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid rating matrix: {0}")]
    InvalidMatrix(String),

    #[error("stimulus {stimulus} has {count} rating(s); at least 2 are required")]
    InsufficientData { stimulus: String, count: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("estimator undefined: {0}")]
    UndefinedEstimator(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("method unavailable: {0}")]
    MethodUnavailable(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{path}: {message}")]
    Archive { path: PathBuf, message: String },

    #[error("archive schema version {found} is not supported (expected {expected})")]
    SchemaVersion { found: u32, expected: u32 },

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
