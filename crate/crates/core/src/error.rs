use alloc::string::String;

/// Errors produced by the core library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("matrix dimension must be at least 1")]
    ZeroDimension,

    #[error("parameter `{name}` is not finite ({value})")]
    NonFinite { name: &'static str, value: f64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("refusing to materialize a {n}x{n} matrix (limit {limit})")]
    TooLarge { n: usize, limit: usize },

    #[error("imaginary residual {magnitude:e} exceeds tolerance {tolerance:e}")]
    ImaginaryResidual { magnitude: f64, tolerance: f64 },

    #[error("label {label} at sample {index} out of range for {classes} classes")]
    LabelOutOfRange {
        index: usize,
        label: usize,
        classes: usize,
    },

    #[error("non-finite loss at epoch {epoch}, batch {batch}: training diverged")]
    Divergence { epoch: usize, batch: usize },

    #[error("bad IDX magic: expected {expected}, found {found}")]
    BadMagic { expected: u32, found: u32 },

    #[error("truncated IDX payload: expected {expected} bytes, found {actual}")]
    Truncated { expected: usize, actual: usize },

    #[error("image count {images} does not match label count {labels}")]
    CountMismatch { images: usize, labels: usize },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("row {row}: expected {expected} columns, found {found}")]
    Arity {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("row {row}, column {column}: `{cell}` is not a number")]
    NonNumeric {
        row: usize,
        column: usize,
        cell: String,
    },

    #[error("row {row}: label {value} is not an integer in 0..{classes}")]
    InvalidLabel { row: usize, value: f64, classes: usize },

    #[error("row {row}: feature value is not finite")]
    NonFiniteFeature { row: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid model: {0}")]
    Model(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

impl Error {
    /// True for errors that indicate a numerical failure rather than bad input.
    pub fn is_numerics(&self) -> bool {
        matches!(self, Error::ImaginaryResidual { .. } | Error::Divergence { .. })
    }
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
