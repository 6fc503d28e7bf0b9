use thiserror::Error;

/// Errors raised by the engines, oracles and file readers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("assignment is partial: variable {0} is unassigned")]
    PartialAssignment(usize),

    #[error("enumeration of {size} assignments exceeds the limit of {limit}")]
    SizeGuard { size: f64, limit: f64 },

    #[error("elimination would build a table of {size} entries (limit {limit})")]
    WidthGuard { size: f64, limit: f64 },

    #[error("relation {0} is not unary or binary; use distributed relational arc-consistency")]
    NonBinary(usize),

    #[error("unknown fixture `{0}`")]
    UnknownFixture(String),

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("invalid join-graph: {0}")]
    InvalidGraph(String),

    #[error("nodes {0} and {1} are not adjacent")]
    NotAdjacent(usize, usize),

    #[error("graphs are not aligned: {0}")]
    Misaligned(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
