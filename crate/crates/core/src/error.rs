use thiserror::Error;

/// Errors raised by the library.
///
/// Numerical payloads are carried as `f64` so the error type does not depend on the scalar.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("step size underflow at t = {t}")]
    StepSizeUnderflow { t: f64, state: Vec<f64> },

    #[error("right-hand side produced a non-finite value at t = {t}")]
    NonFinite { t: f64, state: Vec<f64> },

    #[error("step budget of {max_steps} exhausted at t = {t}")]
    TooManySteps { t: f64, max_steps: usize },

    #[error("alpha reached zero at t = {t}; the solution leaves the positive regime")]
    Positivity { t: f64 },

    #[error("reconstruction undefined at t = {t}: 1 - u'^2 = {defect} < 0")]
    Domain { t: f64, defect: f64 },

    #[error("time {t} outside the solution span [{lo}, {hi}]")]
    OutOfRange { t: f64, lo: f64, hi: f64 },

    #[error("flow failed at t = {t}: {reason}")]
    Flow { t: f64, reason: String },

    #[error("csv: {0}")]
    Csv(String),
}

impl Error {
    /// True for failures of the numerics (as opposed to bad inputs).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::StepSizeUnderflow { .. }
                | Error::NonFinite { .. }
                | Error::TooManySteps { .. }
                | Error::Positivity { .. }
                | Error::Domain { .. }
                | Error::Flow { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn precondition(msg: impl Into<String>) -> Error {
    Error::Precondition(msg.into())
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
