use thiserror::Error;

use crate::machine::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid symbol: {0}")]
    Symbol(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("machine `{name}` is invalid: {}", render(.violations))]
    Invalid { name: String, violations: Vec<Violation> },

    #[error("input alphabet: {0}")]
    InputAlphabet(String),

    #[error("query alphabet: {0}")]
    QueryAlphabet(String),

    #[error("resource bounds exceeded: {0}")]
    ResourceExceeded(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("machine `{machine}` is not normalized: {}", render(.violations))]
    NotNormalized { machine: String, violations: Vec<Violation> },

    #[error("enumeration budget exceeded: {0}")]
    Budget(String),

    #[error("unknown name `{0}`")]
    UnknownName(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn render(v: &[Violation]) -> String {
    v.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
}
