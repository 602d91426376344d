use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("unknown transition `{0}`")]
    UnknownTransition(String),

    #[error("unknown place `{0}`")]
    UnknownPlace(String),

    #[error("unknown state `{0}`")]
    UnknownState(String),

    #[error("transition `{0}` is not enabled")]
    NotEnabled(String),

    #[error("duplicate name `{0}`")]
    DuplicateName(String),

    #[error("expected {expected} inputs, got {actual}")]
    ArityMismatch { expected: usize, actual: usize },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid net: {0}")]
    InvalidNet(String),

    #[error("invalid machine: {0}")]
    InvalidMachine(String),

    #[error("unsupported instruction at state `{state}`: {kind}")]
    Unsupported { state: String, kind: String },

    #[error("nondeterminism at state `{state}`: {count} arcs enabled")]
    Nondeterminism { state: String, count: usize },

    #[error("register R{register} would drop below zero on arc from `{state}`")]
    NegativeRegister { state: String, register: usize },

    #[error("ill-formed arc: {0}")]
    IllFormedArc(String),

    #[error("state `{0}` is not compressible")]
    NotCompressible(String),

    #[error("corrupt marking: {0}")]
    CorruptMarking(String),

    #[error("unknown strategy `{0}`")]
    UnknownStrategy(String),

    #[error("{0}")]
    Io(String),

    #[error("metadata: {0}")]
    Metadata(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn parse(line: usize, column: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            column,
            message: message.into(),
        }
    }
}
