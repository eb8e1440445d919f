use thiserror::Error;

use crate::backend::BackendError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("bin index {index} is outside the plan ({len} bins)")]
    UnknownBin { index: usize, len: usize },
    #[error("no bin with id `{0}` in the plan")]
    UnknownBinId(String),
    #[error("coverage plan `{0}` has no bins")]
    EmptyPlan(String),
    #[error("invalid coverage plan: {0}")]
    InvalidPlan(String),
    #[error("stride window must hold exactly 16 values, got {0}")]
    WindowLength(usize),
    #[error("plan is incomplete but no uncovered bins were supplied")]
    NothingToSample,
    #[error("invalid op/port table: {0}")]
    Table(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("malformed log: {0}")]
    Log(String),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
