use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Io(#[from] io::Error),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid data: {0}")]
    Validation(String),

    #[error("malformed file: {0}")]
    Format(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("index {index} out of range for {len} samples")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("pairwise distance needs at least 2 indices, got {0}")]
    DegenerateSet(usize),

    #[error("neighbour count {n} must lie in 1..={n_samples}")]
    InvalidN { n: usize, n_samples: usize },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("class {0} has no training samples")]
    MissingClass(usize),

    #[error("non-finite value in input")]
    NonFiniteInput,

    #[error("class {class} has {available} samples, {requested} requested")]
    InsufficientClassSamples {
        class: usize,
        available: usize,
        requested: usize,
    },

    #[error("split leaves no samples to evaluate")]
    InsufficientEvaluation,

    #[error("cluster count {k} must lie in 1..={n_samples}")]
    InvalidK { k: usize, n_samples: usize },

    #[error("labels are required for this operation")]
    LabelsRequired,
}
