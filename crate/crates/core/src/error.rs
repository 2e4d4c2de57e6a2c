use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    /// A probability-zero event on generic channels surfaced by the rank tolerance.
    #[error("degenerate channel: {0}")]
    DegenerateChannel(String),

    #[error("infeasible scheme: {0}")]
    InfeasibleScheme(String),

    #[error("invalid design: {0}")]
    InvalidDesign(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
