//! Crate-wide error type.

use thiserror::Error;

/// Errors raised by estimators, policies, and the simulation harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no convergence after {iterations} iterations (last loss {last_loss})")]
    NoConvergence { iterations: usize, last_loss: f64 },

    #[error("bracket exhausted: {0}")]
    BracketExhausted(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("unknown subject: {0}")]
    UnknownSubject(String),

    #[error("missing field: {0}")]
    MissingField(&'static str),

    #[error("malformed timestamp: {0}")]
    MalformedTimestamp(String),

    #[error("line {line}: {source}")]
    AtLine {
        line: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("horizon {got} exceeds the model's {max} periods")]
    HorizonExceeded { got: usize, max: usize },

    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl Error {
    /// Wraps an error with the 1-based line number of the offending record.
    pub fn at_line(self, line: usize) -> Self {
        Error::AtLine {
            line,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
