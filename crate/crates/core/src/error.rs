use thiserror::Error;

/// Errors raised by the numerical routines and the file/config codecs.
#[derive(Debug, Error)]
pub enum SzegoError {
    /// Caller violated a precondition (bad index, mismatched dimensions, ...).
    #[error("usage error: {0}")]
    Usage(String),

    /// The requested quantity is not defined for the given arguments.
    #[error("domain error: {0}")]
    Domain(String),

    /// A discretization budget is violated; the run would silently lose accuracy.
    #[error("budget violation [{budget}]: {detail}")]
    Budget { budget: &'static str, detail: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SzegoError>;

pub(crate) fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(SzegoError::Usage(msg.into()))
}

pub(crate) fn parse_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(SzegoError::Parse(msg.into()))
}
