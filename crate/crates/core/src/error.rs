use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("node {0} appears in the edge list but has no color")]
    Uncolored(usize),

    #[error("duplicate edge {0} -> {1}")]
    DuplicateEdge(usize, usize),

    #[error("duplicate color entry for node {0}")]
    DuplicateColor(usize),

    #[error("node ids must be dense: node {0} has no color entry")]
    SparseIds(usize),

    #[error("the {0} group is empty")]
    EmptyGroup(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("fixed-point iteration did not converge in {iters} iterations (residual {residual:e})")]
    NotConverged { iters: usize, residual: f64 },

    #[error("phi = {phi} is not attainable by any jump vector ({side})")]
    Infeasible { phi: f64, side: &'static str },

    #[error("dense computation refused: n = {n} exceeds cap {cap}")]
    TooLarge { n: usize, cap: usize },

    #[error("singular system")]
    Singular,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn check_probability(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must lie in (0, 1), got {value}"
        )))
    }
}
