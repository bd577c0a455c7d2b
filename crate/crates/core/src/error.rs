use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numerical overflow: {0}")]
    NumericalOverflow(String),

    #[error("unsupported derivative order {requested} (available up to {available})")]
    UnsupportedOrder { requested: usize, available: usize },

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),
}

pub type Result<T> = std::result::Result<T, LabError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(LabError::InvalidArgument(msg.into()))
}

pub(crate) fn check_dims(context: &str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        invalid(format!("{context}: dimension mismatch (expected {expected}, got {got})"))
    }
}
