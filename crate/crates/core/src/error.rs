//! Error type shared by every module of the crate.

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("missing key `{0}`")]
    MissingKey(String),

    #[error("unknown algorithm `{0}`")]
    UnknownAlgorithm(String),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{0} is not supported by this component")]
    Capability(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("datum {0} is already allocated to this cluster")]
    DuplicateDatum(usize),

    #[error("datum {0} is not allocated to this cluster")]
    MissingDatum(usize),

    #[error("state kind mismatch: {0}")]
    KindMismatch(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("csv error: {0}")]
    Csv(String),

    #[error("failed to decode chain record {record}: {message}")]
    Decode { record: usize, message: String },

    #[error("empty chain")]
    EmptyChain,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
