use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch in {op}: {detail}")]
    Dimension { op: &'static str, detail: String },

    #[error("non-finite entry at index {index}")]
    NonFinite { index: usize },

    #[error("unknown code `{name}`; valid names: {valid}")]
    UnknownCode { name: String, valid: String },

    #[error("unsupported modulation `{0}`; valid: 4qam, 16qam, 64qam, 256qam")]
    UnsupportedModulation(String),

    #[error("invalid grouping: {0}")]
    InvalidGrouping(String),

    #[error("power constraint violated for dispersion matrix {index}: trace {trace}, expected {expected}")]
    PowerConstraint {
        index: usize,
        trace: f64,
        expected: f64,
    },

    #[error("transform does not match code grouping: {0}")]
    GroupMismatch(String),

    #[error("degenerate mixing row for group {group:?}: combined matrix has zero power")]
    DegenerateMixing { group: Vec<usize> },

    #[error("index {index} out of range 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("invalid angle {0} rad; must lie in [0, pi/2)")]
    InvalidAngle(f64),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("infeasible budget: {count} evaluations requested, limit is {limit}")]
    Budget { count: u128, limit: u128 },

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn dim_err(op: &'static str, detail: impl Into<String>) -> Error {
    Error::Dimension {
        op,
        detail: detail.into(),
    }
}
