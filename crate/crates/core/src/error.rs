use thiserror::Error;

/// Errors shared by every module in this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated an operation's preconditions.
    #[error("rejected input: {0}")]
    RejectedInput(String),
    /// Training produced non-finite losses, gradients, or parameters.
    #[error("training diverged: {0}")]
    TrainingDiverged(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn reject<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::RejectedInput(msg.into()))
}

pub(crate) fn diverged<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::TrainingDiverged(msg.into()))
}
