use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by the numerical engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("quadrature did not converge within {subdivisions} subdivisions (estimate {estimate:e}, error {error:e})")]
    NonConvergence {
        subdivisions: usize,
        estimate: f64,
        error: f64,
    },

    #[error("integral diverges: {0}")]
    DivergentIntegral(String),

    #[error("root is not bracketed on [{lo}, {hi}]: f(lo) = {f_lo:e}, f(hi) = {f_hi:e}")]
    InvalidBracket { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("no sign change found: {0}")]
    NoBracket(String),

    #[error("Monte Carlo sample is empty")]
    EmptySample,

    #[error("evaluation failed: {0}")]
    EvaluationFailure(String),

    #[error("value {value} is outside the admissible range: {context}")]
    OutOfRange { value: f64, context: String },

    #[error("x = {x} is outside the payoff domain [{lo}, {hi}]")]
    OutOfDomain { x: f64, lo: f64, hi: f64 },

    #[error("degenerate parameter sensitivity: {0}")]
    DegenerateParameter(String),

    #[error("cross-check failed: {0}")]
    SelfCheck(String),

    #[error("family is not left-monomodal: {0}")]
    NotMonomodal(String),

    #[error("undefined measure: {0}")]
    UndefinedMeasure(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("ambiguous classification: {0}")]
    Ambiguous(String),
}

/// Coarse grouping used by front ends to map errors onto exit statuses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    /// Bad input or violated precondition.
    Input,
    /// The numerics failed to converge or bracket.
    Numerical,
    /// The requested quantity does not exist (infinite semi-moment).
    Undefined,
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::NonConvergence { .. }
            | Error::InvalidBracket { .. }
            | Error::NoBracket(_)
            | Error::DegenerateParameter(_)
            | Error::NotMonomodal(_)
            | Error::SelfCheck(_)
            | Error::EvaluationFailure(_)
            | Error::Ambiguous(_) => ErrorCategory::Numerical,
            Error::DivergentIntegral(_) | Error::UndefinedMeasure(_) => ErrorCategory::Undefined,
            Error::EmptySample
            | Error::OutOfRange { .. }
            | Error::OutOfDomain { .. }
            | Error::Precondition(_)
            | Error::InvalidInput(_) => ErrorCategory::Input,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
}
