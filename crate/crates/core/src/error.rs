use thiserror::Error;

/// Errors produced by the library.
///
/// The variants are grouped so a front end can map them onto exit codes:
/// malformed input, refused preconditions and broken internal invariants.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid field `{field}`: {message}")]
    Schema { field: String, message: String },

    #[error("length mismatch: expected {expected}, got {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("limit exceeded: {0}")]
    LimitExceeded(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn schema(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn precondition(message: impl Into<String>) -> Self {
        Error::Precondition(message.into())
    }

    /// True for errors caused by malformed user input.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. } | Error::Schema { .. } | Error::LengthMismatch { .. }
        )
    }

    /// True for refused preconditions and exceeded limits.
    pub fn is_refusal(&self) -> bool {
        matches!(self, Error::LimitExceeded(_) | Error::Precondition(_))
    }
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        let text = err.to_string();
        let message = match text.rfind(" at line ") {
            Some(idx) => text[..idx].to_string(),
            None => text,
        };
        Error::Parse {
            line: err.line(),
            column: err.column(),
            message,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
