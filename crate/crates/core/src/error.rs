use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid fractional order {0}: must lie in (0, 1]")]
    InvalidOrder(f64),

    #[error("length mismatch: {what} (expected {expected}, got {got})")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("grid mismatch between fields")]
    GridMismatch,

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid time mesh: {0}")]
    InvalidMesh(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("insufficient history: step {step} needs {needed} stored levels, have {have}")]
    InsufficientHistory {
        step: usize,
        needed: usize,
        have: usize,
    },

    #[error("NEGATIVE_SHIFT at step {step}: implicit diagonal {shift:.6e} is not positive")]
    NegativeShift { step: usize, shift: f64 },

    #[error("NON_CONVERGED at step {step}: fixed-point increment {increment:.3e} after {iterations} iterations")]
    NonConverged {
        step: usize,
        iterations: usize,
        increment: f64,
    },

    #[error("nonpositive error value {0} in rate computation")]
    NonPositiveError(f64),

    #[error("MISSING_KEY `{key}` (line {line})")]
    MissingKey { key: String, line: usize },

    #[error("BAD_VALUE at line {line}: {message}")]
    BadValue { line: usize, message: String },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
