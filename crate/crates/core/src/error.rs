use std::path::PathBuf;

use thiserror::Error;

/// Failure modes of zero-table ingestion. Each variant names the 1-based
/// line that triggered it.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("no ordinates")]
    Empty,
    #[error("non-numeric ordinate at line {line}: {text:?}")]
    NonNumeric { line: usize, text: String },
    #[error("not ascending at line {line}")]
    NotAscending { line: usize },
    #[error("non-positive ordinate at line {line}")]
    NonPositive { line: usize },
    #[error("blank line at line {line}")]
    BlankLine { line: usize },
    #[error("first ordinate {value} outside (14.0, 14.3) at line {line}; not a zeta-zero table")]
    FirstOrdinate { line: usize, value: f64 },
}

#[derive(Debug, Error)]
pub enum LabError {
    #[error("{path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: ParseError,
    },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("{what} = {value} is outside the available range [{lo}, {hi}]")]
    OutOfRange {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error(
        "zero table too short: need ordinates in [{need_lo}, {need_hi}], table ends at {t_max}"
    )]
    TableTooShort {
        need_lo: f64,
        need_hi: f64,
        t_max: f64,
    },
    #[error("resource limit: {0}")]
    Resource(String),
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("cannot access {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl LabError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        LabError::Domain(msg.into())
    }
}

pub type Result<T, E = LabError> = std::result::Result<T, E>;
