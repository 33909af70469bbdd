use thiserror::Error;

/// Crate-wide error type. Variants carry enough context to report the
/// offending quantity without holding references into caller data.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite input")]
    NonFiniteInput,

    #[error("bandwidth must be positive and finite")]
    InvalidBandwidth,

    #[error("duplicate centers: points {first} and {second} are identical")]
    DuplicateCenters { first: usize, second: usize },

    #[error("gram not positive definite")]
    GramNotPositiveDefinite,

    #[error("index out of range: {index} not below {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("mismatched dataset reference")]
    MismatchedSpace,

    #[error("radius must be positive (finite or infinite)")]
    InvalidRadius,

    #[error("q must lie strictly between 0 and 1")]
    InvalidMixingWeight,

    #[error("s must exceed 1")]
    InvalidStepScale,

    #[error("scaling law invalid: {0}")]
    InvalidScalingLaw(String),

    #[error(
        "ball solve failed: no convergence after {iterations} iterations, \
         bracket [{lo}, {hi}] with norms [{norm_lo}, {norm_hi}], target {target}"
    )]
    BallSolveFailed {
        iterations: usize,
        lo: f64,
        hi: f64,
        norm_lo: f64,
        norm_hi: f64,
        target: f64,
    },

    #[error("degenerate curve: {0}")]
    DegenerateCurve(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("io error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
