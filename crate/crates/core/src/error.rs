use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter lies outside its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The operation is undefined for the given input (negative time, too few samples, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Exhaustive enumeration was requested above the configured cap.
    #[error("enumeration over 2^{n} vectors exceeds the cap of 2^{cap}; use the forward recursion")]
    Capacity { n: usize, cap: usize },

    #[error("degenerate Fisher information: {0}")]
    DegenerateInformation(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
