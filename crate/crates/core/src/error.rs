use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Which configurable limit was hit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cap {
    Disjuncts,
    Universe,
    CoreUniverse,
    Ground,
    Assignments,
    Facets,
}

impl std::fmt::Display for Cap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Cap::Disjuncts => "max-disjuncts",
            Cap::Universe => "max-universe",
            Cap::CoreUniverse => "max-core-universe",
            Cap::Ground => "max-ground",
            Cap::Assignments => "max-assignments",
            Cap::Facets => "max-facets",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("signature mismatch: {0}")]
    SignatureMismatch(String),
    #[error("arity mismatch for `{symbol}`: expected {expected}, found {found}")]
    ArityMismatch {
        symbol: String,
        expected: usize,
        found: usize,
    },
    #[error("unknown relation symbol `{0}`")]
    UnknownSymbol(String),
    #[error("element `{0}` is not in the universe")]
    UnknownElement(String),
    #[error("cap {cap} exceeded: {value} > {limit}")]
    CapExceeded { cap: Cap, value: u128, limit: u128 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("invalid structure: {0}")]
    InvalidStructure(String),
    #[error("invalid complex: {0}")]
    InvalidComplex(String),
    #[error("parse error at {line}:{column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
}

impl Error {
    pub(crate) fn cap(cap: Cap, value: impl TryInto<u128>, limit: impl TryInto<u128>) -> Self {
        Error::CapExceeded {
            cap,
            value: value.try_into().unwrap_or(u128::MAX),
            limit: limit.try_into().unwrap_or(u128::MAX),
        }
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
}
