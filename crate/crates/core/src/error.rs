use alloc::string::String;

/// Errors raised by the in-memory index pipeline.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("cannot normalize row {row}: zero norm")]
    ZeroNorm { row: usize },

    #[error("graph and dataset disagree: graph has {graph} nodes, dataset has {dataset}")]
    GraphMismatch { graph: usize, dataset: usize },

    #[error("index does not match graph: {0}")]
    IndexMismatch(String),

    #[error("degenerate training distribution: {0}")]
    Degenerate(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
