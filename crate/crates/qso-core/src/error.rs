use crate::ast::Span;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QsoError {
    #[error("syntax error at {span}: {msg}")]
    Syntax { span: Span, msg: String },
    #[error("unknown relation `{name}` at {span}")]
    UnknownRelation { name: String, span: Span },
    #[error("arity mismatch for `{name}` at {span}: expected {expected}, found {found}")]
    Arity {
        name: String,
        expected: usize,
        found: usize,
        span: Span,
    },
    #[error("naming convention violated at {span}: {msg}")]
    Naming { span: Span, msg: String },
    #[error("type error at {span}: {msg}")]
    Type { span: Span, msg: String },
    #[error("line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error("invalid signature: {0}")]
    Signature(String),
    #[error("budget exceeded: {0}")]
    Budget(String),
    #[error("unbound {kind} `{name}`")]
    Unbound { kind: &'static str, name: String },
    #[error("invalid assignment: {0}")]
    Assignment(String),
    #[error("evaluation error: {0}")]
    Eval(String),
    #[error("fragment error: {0}")]
    Fragment(String),
    #[error("invalid formula: {0}")]
    Invalid(String),
    #[error("non-Horn clause: {0}")]
    NotHorn(String),
}

impl QsoError {
    pub fn is_budget(&self) -> bool {
        matches!(self, QsoError::Budget(_))
    }

    pub fn span(&self) -> Option<Span> {
        match self {
            QsoError::Syntax { span, .. }
            | QsoError::UnknownRelation { span, .. }
            | QsoError::Arity { span, .. }
            | QsoError::Naming { span, .. }
            | QsoError::Type { span, .. } => Some(*span),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, QsoError>;
