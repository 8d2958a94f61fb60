use thiserror::Error;

/// Errors produced by the parameter checks, quadrature, and solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum HardyError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid cone: {0}")]
    InvalidCone(String),

    #[error("cone is not admissible: {0}")]
    Inadmissible(String),

    #[error("weight cos^{alpha}(θ) is not integrable up to θ = π/2")]
    NonIntegrableWeight { alpha: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value encountered at θ = {theta}")]
    NonFinite { theta: f64 },

    #[error("solver did not converge after {iterations} iterations (last residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("shifted operator is not positive definite (pivot {pivot:e} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("initial profile vanishes after imposing Dirichlet conditions")]
    DegenerateInit,

    #[error("unsupported combination: {0}")]
    Unsupported(String),

    #[error("zero denominator in Rayleigh quotient")]
    ZeroDenominator,

    #[error("quotient {quotient} falls below the reference constant {reference} (tolerance {tol:e})")]
    InequalityViolated { quotient: f64, reference: f64, tol: f64 },
}

pub type Result<T> = std::result::Result<T, HardyError>;
