//! Crate-wide error type.

use thiserror::Error;

/// Errors returned by the simulator library.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated an operation's preconditions.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// A configuration document was structurally valid but semantically wrong.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A configuration or data document failed to parse.
    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn argument(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
