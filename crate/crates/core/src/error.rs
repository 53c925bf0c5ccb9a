use thiserror::Error;

use crate::loss::LossComponents;
use crate::synthesis::TrainingTrace;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The optimizer produced a non-finite checkpoint loss. The trace
    /// recorded up to (and excluding) the failing checkpoint is attached.
    #[error(
        "non-finite loss at iteration {iteration} (local={}, distance={}, identity={})",
        components.local,
        components.distance,
        components.identity
    )]
    NumericalAbort {
        iteration: usize,
        components: LossComponents,
        partial_trace: Box<TrainingTrace>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
