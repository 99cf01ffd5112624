use thiserror::Error;

use crate::rational::{format_rational, Rational};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("{what} must be nonnegative, got {}", format_rational(.value))]
    Negative { what: String, value: Rational },

    #[error("invalid matching: {0}")]
    InvalidMatching(String),

    #[error("shrink guarantee not applicable: window {} <= 2 * delta {}", format_rational(.window), format_rational(.delta))]
    GuaranteeNotApplicable { window: Rational, delta: Rational },

    #[error("infeasible schedule: {0}")]
    Infeasible(String),

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("budget guard: {0}")]
    BudgetExceeded(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("arithmetic overflow in {0}")]
    Overflow(&'static str),

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

impl Error {
    /// Process exit code used by the CLI for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. } | Error::Io(_) => 2,
            Error::BudgetExceeded(_) => 4,
            _ => 3,
        }
    }
}
