use thiserror::Error;

use crate::rootsys::Family;

/// Errors raised anywhere in the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unsupported root system: family {family:?} with size parameter {rank}")]
    UnsupportedSystem { family: Family, rank: usize },

    #[error("out of scope: {0}")]
    OutOfScope(String),

    #[error("pole or domain error in {node} (magnitude {magnitude:e})")]
    Domain { node: &'static str, magnitude: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not orthogonal (deviation {0:e})")]
    NotOrthogonal(f64),

    #[error("operator order {0} exceeds the supported maximum of {max}", max = crate::diffop::MAX_ORDER)]
    OrderTooHigh(usize),

    #[error("no interior point with margin {margin} found after {attempts} attempts")]
    Sampling { margin: f64, attempts: usize },

    #[error("unknown symmetric space label {0:?}")]
    UnknownLabel(String),

    #[error("n = {n} is outside the validity range of {label} ({range})")]
    OutOfRange {
        label: String,
        n: u32,
        range: &'static str,
    },

    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("rank-deficient calibration system (rank {rank} < {unknowns} unknowns)")]
    RankDeficient { rank: usize, unknowns: usize },

    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
