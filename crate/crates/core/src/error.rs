use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{field} must be in {range}, got {value}")]
    InvalidProbability {
        field: &'static str,
        range: &'static str,
        value: String,
    },

    #[error("{what} = {value} is out of range (expected {expected})")]
    OutOfRange {
        what: &'static str,
        value: i64,
        expected: String,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{0} is not supported in exact mode")]
    NotExact(&'static str),

    #[error("condition graph component is not a path (vertex {vertex} has degree {degree})")]
    NotAPath { vertex: usize, degree: usize },

    #[error("count overflow: {0}")]
    Overflow(String),

    #[error("checkpoint rejected: {0}")]
    Checkpoint(String),

    #[error("malformed table: {0}")]
    Table(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn out_of_range(what: &'static str, value: impl TryInto<i64>, expected: impl Into<String>) -> Self {
        Error::OutOfRange {
            what,
            value: value.try_into().unwrap_or(i64::MAX),
            expected: expected.into(),
        }
    }
}
