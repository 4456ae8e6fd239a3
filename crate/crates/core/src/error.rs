use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DcError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("invariant violation: {0}")]
    Invariant(String),
}

impl DcError {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            DcError::Numeric(_) => 1,
            DcError::InvalidInput(_) => 2,
            DcError::Invariant(_) => 3,
        }
    }

    /// The same error with `what: ` prefixed to its message.
    pub fn context(self, what: &str) -> Self {
        match self {
            DcError::InvalidInput(m) => DcError::InvalidInput(format!("{what}: {m}")),
            DcError::Numeric(m) => DcError::Numeric(format!("{what}: {m}")),
            DcError::Invariant(m) => DcError::Invariant(format!("{what}: {m}")),
        }
    }
}

pub type Result<T> = std::result::Result<T, DcError>;
