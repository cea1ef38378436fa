use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("invalid split: {0}")]
    InvalidSplit(String),

    #[error("labeled set needs samples of both classes")]
    SingleClass,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("kernel entry {value} lies outside [0, {bound}]; supply a larger d override")]
    KernelBound { value: f64, bound: f64 },

    #[error("dual point violates its box constraints: {0}")]
    BoxViolation(String),

    #[error("index {0} is not an unlabeled sample")]
    NotUnlabeled(usize),

    #[error("candidate {0} is already selected")]
    AlreadySelected(usize),

    #[error("cardinality {k} out of range 1..={max}")]
    Cardinality { k: usize, max: usize },

    #[error("enumeration over {0} candidates exceeds the oracle limit")]
    EnumerationTooLarge(usize),

    #[error("unknown dataset `{0}`")]
    UnknownDataset(String),

    #[error("unknown method `{0}`")]
    UnknownMethod(String),

    #[error("{method} refuses |U| = {n_unlabeled} above the cap {cap}")]
    CapExceeded {
        method: String,
        n_unlabeled: usize,
        cap: usize,
    },

    #[error("kernel cache: {0}")]
    Cache(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}
