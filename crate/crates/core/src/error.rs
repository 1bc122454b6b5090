use thiserror::Error;

/// Errors produced by the library and the command layer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("configuration error: {0}")]
    Config(String),

    /// A bound was requested outside the regime where it holds.
    #[error("bound not applicable: {0}")]
    BoundNotApplicable(String),

    #[error("parse error in {path}: {msg}")]
    Parse { path: String, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numeric(_) | Error::BoundNotApplicable(_) => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
