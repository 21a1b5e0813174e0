use thiserror::Error;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    #[error("function `{name}` expects {expected} argument(s), got {found} (byte {offset})")]
    Arity {
        name: String,
        expected: usize,
        found: usize,
        offset: usize,
    },

    #[error("unbound variable `{0}`")]
    UnboundVariable(String),

    #[error("domain error: {kind} in `{subtree}`")]
    Domain { kind: DomainKind, subtree: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("dimension {0} not supported (symbolic inversion needs n <= 4)")]
    Dimension(usize),

    #[error("frame is singular: {0}")]
    SingularFrame(String),

    #[error("chart check failed: {0}")]
    Chart(String),

    #[error("rank of N is not constant over the domain: {0}")]
    NonConstantRank(String),

    #[error("degenerate point: {0}")]
    Degenerate(String),

    #[error("classification inconsistency: {0}")]
    Classification(String),

    #[error("trivial-only case: {0}")]
    TrivialOnly(String),

    #[error("integration failed: {0}")]
    Integration(String),

    #[error("{0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainKind {
    SqrtOfNegative,
    LogOfNonPositive,
    DivisionByZero,
    NegativeBaseFractionalPower,
    NonFinite,
}

impl std::fmt::Display for DomainKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            DomainKind::SqrtOfNegative => "sqrt of negative",
            DomainKind::LogOfNonPositive => "ln of non-positive",
            DomainKind::DivisionByZero => "division by zero",
            DomainKind::NegativeBaseFractionalPower => "negative base with fractional exponent",
            DomainKind::NonFinite => "non-finite value",
        };
        f.write_str(s)
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
