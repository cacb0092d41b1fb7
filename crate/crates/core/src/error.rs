use thiserror::Error;

#[derive(Debug, Error)]
pub enum PinError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("unsupported operation: {0}")]
    Unsupported(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("internal consistency check failed: {0}")]
    InternalConsistency(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("theorem violation: {0}")]
    TheoremViolation(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<serde_json::Error> for PinError {
    fn from(err: serde_json::Error) -> Self {
        if err.line() == 0 {
            // raised after parsing finished, so there is no position
            return PinError::Domain(err.to_string());
        }
        PinError::Parse {
            line: err.line(),
            column: err.column(),
            message: err.to_string(),
        }
    }
}

pub type Result<T, E = PinError> = std::result::Result<T, E>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(PinError::Domain(msg.into()))
}
