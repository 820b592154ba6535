use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum Error {
    #[error("line {line}, column {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("{0}")]
    Resolve(String),
    #[error("no parse for term: {0}")]
    NoParse(String),
    #[error("ambiguous term: {0} or {1}")]
    Ambiguous(String, String),
    #[error("variable {0} is unbound in a condition fragment")]
    UnboundVariable(String),
    #[error("equational step limit of {0} exceeded")]
    EqLimit(u64),
    #[error("state limit of {0} exceeded")]
    StateLimit(u64),
    #[error("strategy {0} is not declared")]
    UnknownStrategy(String),
    #[error("{0}")]
    Command(String),
    #[error("{0}")]
    Io(String),
}

impl Error {
    pub fn syntax(line: usize, col: usize, msg: impl Into<String>) -> Self {
        Error::Syntax { line, col, msg: msg.into() }
    }
}
