use num_complex::Complex64;
use thiserror::Error;

/// Errors produced by the numerical routines of this crate.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    #[error("basis matrix is singular (condition number {condition:.3e})")]
    SingularBasis { condition: f64 },

    #[error("resolvent pole: characteristic number {lambda_q} coincides with the requested point")]
    Pole { lambda_q: Complex64 },

    #[error("contour circle of radius {radius:.3e} encloses {count} characteristic numbers")]
    Multiplicity { radius: f64, count: usize },

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("quadrature failed to reach tolerance (best estimate error {error_estimate:.3e} after {panels} panels)")]
    ToleranceFailure { error_estimate: f64, panels: usize },

    #[error("integrand does not decay: {0}")]
    Truncation(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("non-decaying modes at characteristic numbers {offending:?}")]
    NonDecaying { offending: Vec<Complex64> },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
