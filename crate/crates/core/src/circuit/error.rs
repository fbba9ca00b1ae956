use thiserror::Error;

use super::ast::Span;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DslError {
    #[error("{span}: syntax error: {message}")]
    Syntax { span: Span, message: String },

    #[error("{span}: duplicate identifier `{name}`")]
    DuplicateIdentifier { span: Span, name: String },

    #[error("{span}: unknown keyword `{word}`")]
    UnknownKeyword { span: Span, word: String },

    #[error("{span}: unknown identifier `{name}`")]
    UnknownIdentifier { span: Span, name: String },

    #[error("{span}: wire mismatch: expected [{expected}], found [{found}]")]
    WireMismatch { span: Span, expected: String, found: String },

    #[error("{span}: run `{run}` leaves input system(s) [{systems}] unprepared")]
    DanglingSystem { span: Span, run: String, systems: String },

    #[error("{span}: outcome {outcome} out of range for `{name}` ({count} outcomes)")]
    OutcomeOutOfRange { span: Span, name: String, outcome: usize, count: usize },

    #[error("{span}: invalid declaration `{name}`: {reason}")]
    InvalidDeclaration { span: Span, name: String, reason: String },

    #[error("{span}: cannot load `{path}`: {reason}")]
    File { span: Span, path: String, reason: String },

    #[error("no run named `{0}`")]
    UnknownRun(String),
}

impl DslError {
    /// Stable category name used in reports and tests.
    pub fn category(&self) -> &'static str {
        match self {
            DslError::Syntax { .. } => "syntax",
            DslError::DuplicateIdentifier { .. } => "duplicate-identifier",
            DslError::UnknownKeyword { .. } => "unknown-keyword",
            DslError::UnknownIdentifier { .. } => "unknown-identifier",
            DslError::WireMismatch { .. } => "wire-mismatch",
            DslError::DanglingSystem { .. } => "dangling-system",
            DslError::OutcomeOutOfRange { .. } => "outcome-out-of-range",
            DslError::InvalidDeclaration { .. } => "invalid-declaration",
            DslError::File { .. } => "file",
            DslError::UnknownRun(_) => "unknown-run",
        }
    }

    pub fn span(&self) -> Option<Span> {
        match self {
            DslError::Syntax { span, .. }
            | DslError::DuplicateIdentifier { span, .. }
            | DslError::UnknownKeyword { span, .. }
            | DslError::UnknownIdentifier { span, .. }
            | DslError::WireMismatch { span, .. }
            | DslError::DanglingSystem { span, .. }
            | DslError::OutcomeOutOfRange { span, .. }
            | DslError::InvalidDeclaration { span, .. }
            | DslError::File { span, .. } => Some(*span),
            DslError::UnknownRun(_) => None,
        }
    }
}
