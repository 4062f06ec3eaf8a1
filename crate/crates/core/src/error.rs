use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("parse error at line {line} ({key}): {reason}")]
    Parse {
        line: usize,
        key: String,
        reason: String,
    },

    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("innovation covariance is not positive definite")]
    NumericalFailure,

    #[error("energy fit is degenerate: {0}")]
    DegenerateFit(String),

    #[error("yield is undefined: HOTA difference is zero")]
    UndefinedYield,

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Stream(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("TOML error: {0}")]
    Toml(String),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn parse(line: usize, key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Parse {
            line,
            key: key.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
