use thiserror::Error;

/// Every fallible operation in the crate reports one of these.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },

    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("symbol `{symbol}` expects {expected} argument(s), got {got}")]
    ArityMismatch {
        symbol: String,
        expected: usize,
        got: usize,
    },

    #[error("symbol `{symbol}` used as a {used} but declared as a {declared}")]
    KindMismatch {
        symbol: String,
        used: &'static str,
        declared: &'static str,
    },

    #[error("literal is not basic: {0}")]
    NonBasicLiteral(String),

    #[error("duplicate declaration of `{0}`")]
    Duplicate(String),

    #[error("languages do not match: {0}")]
    LanguageMismatch(String),

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("invalid oracle: {0}")]
    InvalidOracle(String),

    #[error("malformed decision tree: {0}")]
    MalformedTree(String),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("contract violated: {0}")]
    Contract(String),

    #[error("query budget of {0} exhausted")]
    Budget(usize),

    #[error("search cap exceeded after {0} nodes")]
    CapExceeded(u64),

    #[error("internal assertion failed: {0}")]
    Internal(String),

    #[error("not found: {0}")]
    NotFound(String),

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("json error: {0}")]
    Json(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
