use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("empty graph")]
    EmptyGraph,

    #[error("io error: {0}")]
    Io(#[from] io::Error),

    #[error(
        "hub labeling exceeded the memory budget ({used} > {budget} bytes); \
         use the Dijkstra oracle instead"
    )]
    LabelBudget { used: usize, budget: usize },

    #[error("bad file format: {0}")]
    Format(String),

    #[error("graph checksum mismatch: file {found:#018x}, graph {expected:#018x}")]
    ChecksumMismatch { expected: u64, found: u64 },

    #[error("subset size {m} out of range 1..={len}")]
    SubsetSize { m: usize, len: usize },

    #[error("brute-force enumeration limited to {limit} values, got {len}")]
    EnumerationGuard { len: usize, limit: usize },

    #[error("node capacity must be in 2..=65535, got {0}")]
    Capacity(usize),

    #[error("requested k = {k} but only {available} POIs are indexed")]
    NotEnoughPois { k: usize, available: usize },

    #[error("invalid query: {0}")]
    InvalidQuery(String),

    #[error("brute-force scan limited to {limit} POIs, got {len}")]
    ScanGuard { len: usize, limit: usize },
}
