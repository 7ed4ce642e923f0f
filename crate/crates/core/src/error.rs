use thiserror::Error;

/// Errors raised by the library. Variants map onto the CLI exit-code classes.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A call that is well-typed but not meaningful for its inputs.
    #[error("usage error: {0}")]
    Usage(String),
    /// A data structure whose invariants do not hold.
    #[error("invariant violation: {0}")]
    Invariant(String),
    #[error("malformed grid file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn usage(msg: impl Into<String>) -> Error {
    Error::Usage(msg.into())
}
