use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian: |H[{row}][{col}] - conj(H[{col}][{row}])| = {deviation:e}")]
    NotHermitian {
        row: usize,
        col: usize,
        deviation: f64,
    },

    #[error("diagonal levels {first} and {second} are degenerate (gap {gap:e})")]
    Degenerate {
        first: usize,
        second: usize,
        gap: f64,
    },

    #[error("invalid model specification: {0}")]
    InvalidSpec(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("energy denominator vanishes at index {index} (distance {distance:e})")]
    PoleHit { index: usize, distance: f64 },

    #[error("linear solve is singular (pivot {pivot:e})")]
    SingularSolve { pivot: f64 },

    #[error("level {level}: no real root of the eigenvalue equation ({reason})")]
    NoRealRoot { level: usize, reason: String },

    #[error("series not converged (tail {tail:e})")]
    NotConverged { tail: f64 },

    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("path-sum evaluation outside supported regime: {0}")]
    RegimeExceeded(String),
}

pub type Result<T> = std::result::Result<T, Error>;
