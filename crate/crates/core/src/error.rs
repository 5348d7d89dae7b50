use thiserror::Error;

/// Errors produced by the toolkit. Every fallible operation returns this type.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("matrix must have at least one row and one column, got {n}x{k}")]
    EmptyMatrix { n: usize, k: usize },
    #[error("matrix data has {got} entries, expected {expected}")]
    WrongLength { expected: usize, got: usize },
    #[error("matrix entries must be 0 or 1, found {0}")]
    InvalidEntry(u8),
    #[error("player index {player} out of range for {k} players")]
    PlayerOutOfRange { player: usize, k: usize },
    #[error("dimension mismatch: expected {expected_n}x{expected_k}, got {n}x{k}")]
    DimensionMismatch {
        expected_n: usize,
        expected_k: usize,
        n: usize,
        k: usize,
    },
    #[error("repetition count must be odd and at least 1, got {0}")]
    InvalidRepetitions(usize),
    #[error("decomposition requires a deterministic protocol")]
    RandomizedProtocol,
    #[error("enumeration needs {needed} steps, above the cap of {cap}")]
    CapExceeded { needed: u128, cap: u128 },
    #[error("infeasible parameters: {0}")]
    Infeasible(String),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("blocks disagree on column count")]
    MismatchedBlocks,
    #[error("weight is nonzero outside the domain of the target function")]
    WeightOutsideDomain,
    #[error("protocol misbehaved: {0}")]
    Protocol(String),
}

pub type Result<T> = std::result::Result<T, Error>;
