//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported raster magic {found:?} at byte {offset} (only P2/P5 graymaps are readable)")]
    UnsupportedMagic { found: String, offset: usize },

    #[error("malformed raster header at byte {offset}: {detail}")]
    MalformedHeader { detail: String, offset: usize },

    #[error("truncated raster payload at byte {offset}: expected {expected} more samples, found {found}")]
    TruncatedPayload {
        expected: usize,
        found: usize,
        offset: usize,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty dataset")]
    EmptyDataset,

    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },

    #[error("non-finite objective at iteration {iteration}")]
    NonFiniteObjective { iteration: usize },

    #[error("black box returned non-finite score for perturbation sample {sample}")]
    NonFiniteScore { sample: usize },

    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
