//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A model or configuration parameter is outside its admissible range.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("order {order} out of range 1..={max}")]
    OrderOutOfRange { order: u32, max: u32 },

    #[error("contraction step q={q} out of range 1..={max}")]
    StepOutOfRange { q: u32, max: u32 },

    /// The convolution coefficient at this frequency is exactly zero, so
    /// normalized diagnostics are undefined there.
    #[error("frequency {freq:?} outside the achievable support at order {order}")]
    UnachievableFrequency { freq: Vec<i64>, order: u32 },

    /// Positive but too small to normalize by; distinct from a structural zero.
    #[error("coefficient at frequency {freq:?}, order {order} underflowed (positive but below {limit:e})")]
    Underflow {
        freq: Vec<i64>,
        order: u32,
        limit: f64,
    },

    #[error("memory budget exceeded: {what} needs {needed} entries (limit {limit})")]
    BudgetExceeded {
        what: &'static str,
        needed: u128,
        limit: u128,
    },

    #[error("grid size {grid} too small: need at least {required} (cutoff {cutoff})")]
    GridTooSmall {
        grid: usize,
        required: usize,
        cutoff: i64,
    },

    #[error("convolution powers available up to order {available}, order {requested} requested")]
    MissingOrder { requested: u32, available: u32 },

    #[error("kernels live on different atomic measures")]
    MeasureMismatch,

    #[error("file {path}: {reason}")]
    File { path: PathBuf, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Exit-code class for the CLI: 2 for configuration problems, 3 for
    /// resource-budget problems, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter { .. }
            | Error::DimensionMismatch { .. }
            | Error::OrderOutOfRange { .. }
            | Error::StepOutOfRange { .. }
            | Error::GridTooSmall { .. }
            | Error::MissingOrder { .. }
            | Error::MeasureMismatch
            | Error::File { .. }
            | Error::Json(_) => 2,
            Error::BudgetExceeded { .. } => 3,
            _ => 1,
        }
    }
}
