use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A trial record violates one of the count constraints.
    #[error("invalid record `{record}`: {constraint}")]
    Validation { record: String, constraint: String },

    /// Input text could not be parsed.
    #[error("format error at {location}: {message}")]
    Format { location: String, message: String },

    /// The data does not carry what the operation needs.
    #[error("unsupported data: {0}")]
    Unsupported(String),

    /// MCMC diagnostics are undefined for the given chains.
    #[error("diagnostics undefined: {0}")]
    Diagnostics(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
