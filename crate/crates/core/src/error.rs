use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid functions are sampled on incompatible grids")]
    GridMismatch,

    #[error("expected {expected} values, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error(
        "warping function is not pinned to the interval endpoints (offending indices {indices:?})"
    )]
    Endpoint { indices: Vec<usize> },

    #[error("warping function is not strictly increasing (offending indices {indices:?})")]
    Monotonicity { indices: Vec<usize> },

    #[error("invalid density: {0}")]
    InvalidDensity(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("reconstructed distribution reaches total mass before the cut point (index {index})")]
    HazardOverflow { index: usize },

    #[error("cumulative distribution cannot be inverted at index {index}")]
    QuantileInversion { index: usize },

    #[error("need at least {required} samples, got {actual}")]
    InsufficientData { required: usize, actual: usize },

    #[error("requested {requested} components but only {available} are available")]
    Truncation { requested: usize, available: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("optimization failed: {0}")]
    Optimization(String),
}

impl Error {
    /// True for failures caused by invalid input data or parameters, as opposed
    /// to numerical breakdowns during a computation.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::HazardOverflow { .. }
                | Error::QuantileInversion { .. }
                | Error::Degenerate(_)
                | Error::Optimization(_)
        )
    }
}
