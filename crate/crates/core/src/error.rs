use thiserror::Error;

/// Errors raised by the bound computations and file formats.
#[derive(Debug, Error)]
pub enum Error {
    /// An input exceeds a hard size guard.
    #[error("size limit exceeded: {0}")]
    SizeLimit(String),

    /// An argument lies outside the domain where a formula is defined.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The quantum/classical ratio is undefined because the classical bound is zero.
    #[error("undefined ratio: classical bound is zero")]
    UndefinedRatio,

    /// Malformed input document. `location` names the offending field or entry.
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
