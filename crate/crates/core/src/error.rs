use thiserror::Error;

/// Errors from transport solvers, aggregation, and sample handling.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("size mismatch: {0}")]
    SizeMismatch(&'static str),

    #[error("non-finite coordinate at index {0}")]
    NonFinite(usize),

    #[error("weights must be nonnegative and sum to 1 (sum = {0})")]
    InvalidWeights(f64),

    #[error("marginals are infeasible: weight sums differ by {0:e}")]
    InfeasibleMarginals(f64),

    #[error("order p must be >= 1, got {0}")]
    InvalidOrder(f64),

    #[error("solver failed to converge: {0}")]
    NumericalFailure(&'static str),

    #[error("negative distance {0} passed to aggregation")]
    NegativeDistance(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),

    #[error("csv ingestion failed: {0}")]
    Csv(#[from] csv::Error),

    #[error("csv ingestion failed: {0}")]
    CsvParse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
