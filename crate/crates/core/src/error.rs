use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    #[error("ideal is not zero-dimensional")]
    NotZeroDimensional,

    #[error("degenerate ideal: {0}")]
    Degenerate(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn arg_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Argument(msg.into()))
}
