use thiserror::Error;

use crate::design::FamilyReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Operands come from different fields, designs or class lists.
    #[error("context mismatch: {0}")]
    Context(String),

    #[error("division by zero in GF({0})")]
    DivisionByZero(u32),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// The input is malformed in a way that is independent of the
    /// combinatorial conditions being tested.
    #[error("structural error: {0}")]
    Structural(String),

    #[error("difference family rejected: {0}")]
    InvalidFamily(FamilyReport),

    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A computation that is guaranteed to succeed on valid input did not.
    #[error("reconstruction failed: {0}")]
    Reconstruction(String),

    /// A result contradicts a proven bound or an independent recheck.
    #[error("internal consistency failure: {0}")]
    Consistency(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
