use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A non-finite value appeared while stepping. `substep` is 1-based.
    #[error("divergence at step {step}, substep {substep}")]
    Divergence { step: usize, substep: usize },

    #[error("training diverged at epoch {epoch}, batch {batch}")]
    TrainingDivergence { epoch: usize, batch: usize },

    #[error("unsupported boundary: {0}")]
    UnsupportedBoundary(String),

    #[error("graph generation failed: {0}")]
    Generation(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}: corrupt data: {reason}")]
    Corrupt { path: PathBuf, reason: String },

    /// A failure while producing one dataset sample.
    #[error("sample seed {seed}: {source}")]
    Sample {
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("usage error: {0}")]
    Usage(String),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
