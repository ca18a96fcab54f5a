//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by graph construction, matrix analysis, and solver runs.
#[derive(Debug, Error)]
pub enum Error {
    #[error("infeasible edge count: n={n} requires {n} <= m <= {max}, got m={m}")]
    InfeasibleEdgeCount { n: usize, m: usize, max: usize },

    #[error("vertex {0} is not a root: it cannot reach every other vertex")]
    NotARoot(usize),

    #[error("eigenvalue 1 is not simple; the Perron vector is not unique")]
    EigenvectorNotUnique,

    #[error("iteration did not converge: {0}")]
    NonConvergence(&'static str),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("shape mismatch: expected {expected_rows}x{expected_cols}, got {rows}x{cols}")]
    ShapeMismatch {
        expected_rows: usize,
        expected_cols: usize,
        rows: usize,
        cols: usize,
    },

    #[error("spectral radius {rho} is not below the contraction target {gamma}")]
    SpectralRadiusTooLarge { rho: f64, gamma: f64 },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("singular system: the summed quadratic form is not positive definite")]
    SingularSystem,

    #[error("ensemble generation failed after {0} resampling attempts")]
    GenerationFailure(usize),

    #[error("non-finite iterate at iteration {0} (step size too large?)")]
    NonFiniteIterate(usize),

    #[error("step size out of range: {0}")]
    StepSizeOutOfRange(String),

    #[error("mixing matrices violate the standing assumptions: {0}")]
    AssumptionViolation(String),

    #[error("matrix is not irreducible")]
    NotIrreducible,

    #[error("diagonal entry {value} is not below lambda* = {lambda_star}")]
    DiagonalTooLarge { value: f64, lambda_star: f64 },

    #[error("trace does not match the certificate: {0}")]
    TraceMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
