use thiserror::Error;

/// Errors raised by the wave packet library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GwpError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not symmetric (residual {residual:e} > {tol:e})")]
    NotSymmetric { residual: f64, tol: f64 },

    #[error("matrix is not antisymmetric (residual {residual:e} > {tol:e})")]
    NotAntisymmetric { residual: f64, tol: f64 },

    #[error("matrix is not positive-definite (min eigenvalue {min_eig:e}, max eigenvalue {max_eig:e})")]
    NotPositiveDefinite { min_eig: f64, max_eig: f64 },

    #[error("matrix is not symplectic (residual {residual:e} > {tol:e})")]
    NotSymplectic { residual: f64, tol: f64 },

    #[error("matrix is not a rotation (residual {residual:e} > {tol:e})")]
    NotRotation { residual: f64, tol: f64 },

    #[error("singular matrix in {0}")]
    Singular(&'static str),

    #[error("Hagedorn constraint violated: |Q^T P - P^T Q| = {r1:e}, |Q^* P - P^* Q - 2iI| = {r2:e}")]
    ConstraintViolation { r1: f64, r2: f64 },

    #[error("phase branch jump of {increment:.3} rad exceeds the tracking limit {limit:.3} rad")]
    BranchJump { increment: f64, limit: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("state became invalid at step {step}: {reason}")]
    StateInvalid { step: usize, reason: String },

    #[error("series `{0}` is empty")]
    EmptySeries(String),

    #[error("time grids do not match: {0}")]
    TimeGridMismatch(String),

    #[error("quadrature rejected: dimension {dim} with order {order} exceeds the cost guard")]
    QuadratureCost { dim: usize, order: usize },

    #[error("the semiclassical bracket is undefined at hbar = 0")]
    ZeroHbar,
}

pub type Result<T> = std::result::Result<T, GwpError>;
