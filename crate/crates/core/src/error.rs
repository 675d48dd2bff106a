use std::path::PathBuf;

use crate::splitting::SolverState;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A non-finite value appeared in an iterate. `last_state` is the last
    /// state whose vectors were all finite.
    #[error("iteration diverged at k = {iteration}: {reason}")]
    Divergence {
        iteration: usize,
        reason: String,
        last_state: Box<SolverState>,
    },

    #[error("oracle failure: {0}")]
    OracleFailure(String),

    #[error("malformed image {path}: {reason}")]
    Image { path: PathBuf, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
