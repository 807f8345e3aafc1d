use thiserror::Error;

/// Errors raised by the estimation, criterion and simulation routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("sample size n = {n} is too small (need n >= {min})")]
    SampleSize { n: usize, min: usize },

    #[error("covariance matrix is not positive definite (pivot {pivot} is {value:e} after jitter)")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("matrix is not symmetric at ({i}, {j})")]
    NotSymmetric { i: usize, j: usize },

    #[error("invalid tapering weights: {0}")]
    InvalidWeights(String),

    /// A requested computation exceeds a documented complexity cap or
    /// lacks the information it needs (e.g. a truncation band).
    #[error("infeasible computation: {0}")]
    Infeasible(String),

    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
