use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// The input carries no usable signal for the requested statistic
    /// (e.g. an edge-based estimate on a constant image).
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// Nothing in the image can be used at all (fully saturated, fully masked).
    #[error("unrecoverable input: {0}")]
    UnrecoverableInput(String),

    #[error("no derivative colors survived extraction")]
    NoDerivativeColors,

    #[error("region out of bounds: {0}")]
    OutOfBounds(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: decode failed: {message}")]
    Decode { path: PathBuf, message: String },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
