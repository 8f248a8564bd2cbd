use thiserror::Error;

#[derive(Debug, Error)]
pub enum FileError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("no records")]
    NoRecords,
    #[error("truncated at byte {offset}: expected {needed} more bytes, found {available}")]
    Truncated {
        offset: usize,
        needed: usize,
        available: usize,
    },
    #[error("record at byte {offset} has dimension {found}, expected {expected}")]
    DimensionMismatch {
        offset: usize,
        expected: usize,
        found: usize,
    },
    #[error("bad magic: found {found:?}, expected {expected:?}")]
    BadMagic { found: String, expected: String },
    #[error("unsupported version {found}, expected {expected}")]
    Version { found: u32, expected: u32 },
    #[error("invalid value at byte {offset}: {detail}")]
    Invalid { offset: usize, detail: String },
    #[error("{extra} trailing bytes after byte {offset}")]
    Trailing { offset: usize, extra: usize },
    #[error(transparent)]
    Core(#[from] finger_core::Error),
}
