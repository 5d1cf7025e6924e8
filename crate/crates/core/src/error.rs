use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} out of range: {value} (allowed {allowed})")]
    Range {
        what: &'static str,
        value: String,
        allowed: String,
    },

    #[error("index set too large: {count} multi-indices exceeds cap {cap}")]
    Size { count: u128, cap: u128 },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("invalid config field `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("propagator diverged at t = {time} for multi-index {index}")]
    Divergence { index: String, time: f64 },

    #[error("no crossing found after {attempts} attempts")]
    RejectionExhausted { attempts: usize },

    #[error("baseline `{baseline}` is not applicable to model `{model}`")]
    BaselineMismatch { baseline: String, model: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn range(what: &'static str, value: impl ToString, allowed: impl ToString) -> Self {
        Error::Range {
            what,
            value: value.to_string(),
            allowed: allowed.to_string(),
        }
    }

    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Divergence { .. } => 3,
            Error::Io { .. } => 1,
            _ => 2,
        }
    }
}
