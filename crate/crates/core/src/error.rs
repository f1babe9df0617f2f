use thiserror::Error;

/// Errors raised by the library.
///
/// Data-quality findings on datasets are reported as
/// [`Violation`](crate::confmap::Violation) values, not as errors.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate vector: entries must be nonnegative with a positive sum")]
    DegenerateVector,

    #[error("degenerate histogram: image has fewer than two distinct intensities")]
    DegenerateHistogram,

    #[error("no foreground: mask has no set pixels")]
    NoForeground,

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("single-slice measure not normalizable (density {0})")]
    SingleSliceMeasure(f64),

    #[error("degenerate densities: {0}")]
    DegenerateDensities(String),

    #[error("index {index} out of range for {len} elements")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("missing labels: {0}")]
    MissingLabels(String),

    #[error("unknown label `{0}`")]
    UnknownLabel(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("oracle check failed: {0}")]
    Oracle(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
