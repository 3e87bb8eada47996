use std::path::PathBuf;
use thiserror::Error;

/// Error type shared by every module in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An operation was invoked on inputs that do not satisfy its declared
    /// contract (e.g. an envelope-gated check on a driver without envelopes).
    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("numerical failure at step {step}: {message}")]
    NumericalFailure { step: usize, message: String },

    #[error("degenerate ratio: {0}")]
    DegenerateRatio(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn contract(msg: impl Into<String>) -> Self {
        Error::ContractViolation(msg.into())
    }

    pub fn numerical(step: usize, msg: impl Into<String>) -> Self {
        Error::NumericalFailure {
            step,
            message: msg.into(),
        }
    }
}
