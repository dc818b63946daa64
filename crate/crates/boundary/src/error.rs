use thiserror::Error;

pub type Result<T> = std::result::Result<T, BoundaryError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundaryError {
    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error(
        "time grid mismatch: expected N={expected_n}, T={expected_t}; got N={got_n}, T={got_t}"
    )]
    GridMismatch {
        expected_n: usize,
        expected_t: f64,
        got_n: usize,
        got_t: f64,
    },

    #[error("signal length {got} does not match grid length {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("hat index {index} outside 1..={max}")]
    HatIndex { index: usize, max: usize },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("signal is not in {space}: {detail}")]
    NotInSpace { space: &'static str, detail: String },

    #[error("solver configuration error: {0}")]
    Configuration(String),

    #[error("neumann kernel is not causal: kernel(0) = {0}")]
    NonCausalKernel(f64),
}
