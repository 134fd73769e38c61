use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the spectra pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// Two bit vectors or spectra cannot be compared (length, challenge set or bucketing differ).
    #[error("incomparable operands: {0}")]
    Incomparable(String),

    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Simulation or run configuration failed validation.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Malformed input data, with the 1-based line number when known.
    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn incomparable(msg: impl Into<String>) -> Self {
        Error::Incomparable(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
