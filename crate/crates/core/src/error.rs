use thiserror::Error;

/// Errors shared by every numerical module in the crate.
#[derive(Debug, Error)]
pub enum KsError {
    #[error("mass {0} is outside the subcritical range (0, 8*pi)")]
    MassOutOfRange(f64),

    #[error("parameter {name} = {value} is invalid: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("grid is invalid: {0}")]
    InvalidGrid(String),

    #[error("ODE integration failed near s = {location}: {reason}")]
    IntegrationFailure { location: f64, reason: String },

    #[error("root bracket not found for {what} (searched up to {limit})")]
    BracketNotFound { what: String, limit: f64 },

    #[error("truncation point s_max = {s_max} too small for tail tolerance {tol}")]
    TruncationTooSmall { s_max: f64, tol: f64 },

    #[error("linear solve failed: {0}")]
    LinearSolveFailure(String),

    #[error("eigenvalue search found only {found} of {requested} roots below {lambda_max}")]
    TooFewEigenvalues {
        found: usize,
        requested: usize,
        lambda_max: f64,
    },

    #[error("time step too large: monotonicity of the cumulated mass was violated by {0:.3e}")]
    MonotonicityViolation(f64),

    #[error("density reconstruction produced negative values (min {0:.3e})")]
    NegativeDensity(f64),

    #[error("decay-rate fit rejected: {0}")]
    RateFitRejected(String),

    #[error("quadratic-form precondition violated: {0}")]
    FormPrecondition(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, KsError>;
