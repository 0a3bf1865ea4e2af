use thiserror::Error;

/// Errors raised anywhere in the core library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("element {element} is not in the carrier of {semiring}")]
    Carrier { semiring: String, element: String },

    #[error("natural number overflow in {0}")]
    Overflow(&'static str),

    #[error("cannot fold an empty sequence")]
    EmptyFold,

    #[error("unknown relation `{0}`")]
    UnknownRelation(String),

    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),

    #[error("ambiguous attribute reference `{0}`")]
    AmbiguousAttribute(String),

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("arity mismatch: expected {expected}, got {got}")]
    Arity { expected: usize, got: usize },

    #[error("type mismatch: {0}")]
    Type(String),

    #[error("world {id} out of range 1..={count}")]
    WorldOutOfRange { id: usize, count: usize },

    #[error("world budget exceeded: {needed} > {budget}")]
    Budget { needed: u128, budget: u128 },

    #[error("sandwich violation in `{relation}` for tuple {tuple}: label {label} is not below {det}")]
    Sandwich {
        relation: String,
        tuple: String,
        label: String,
        det: String,
    },

    #[error("invalid model: {0}")]
    Model(String),

    #[error("no valuation satisfies the global condition")]
    NoValuation,

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("unsupported construct: {0}")]
    Unsupported(String),

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse { line, msg: msg.into() }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
