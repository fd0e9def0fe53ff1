use thiserror::Error;

/// Errors raised by the solver stack.
#[derive(Debug, Error)]
pub enum KgsError {
    /// Field/grid shapes disagree, or values are not finite.
    #[error("structural error: {0}")]
    Structural(String),

    /// An argument lies outside its admissible range.
    #[error("domain error: {0}")]
    Domain(String),

    /// The fibering equation has no positive root (both nonlinear moments vanish).
    #[error("no fibering root: {0}")]
    NoRoot(String),

    /// A documented precondition does not hold.
    #[error("precondition failed: {0}")]
    Precondition(String),

    /// The descent engine failed; `trace` holds the energy history.
    #[error("solver did not converge: {reason}")]
    NonConvergence { reason: String, trace: Vec<f64> },

    #[error("inconsistent potential data: {0}")]
    Inconsistency(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("config error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = KgsError> = std::result::Result<T, E>;
