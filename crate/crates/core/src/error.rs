use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("synthesis failed: {0}")]
    Synthesis(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("inconsistent sign pattern at carrier block {position}")]
    InconsistentPattern { position: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
