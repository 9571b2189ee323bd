use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("sparseness is undefined for the zero vector")]
    ZeroVector,

    #[error("dimension must be at least 2, got {0}")]
    DimensionTooSmall(usize),

    #[error("target norms violate lambda2 <= lambda1 <= sqrt(n) * lambda2 (n = {n}, lambda1 = {lambda1}, lambda2 = {lambda2})")]
    InvalidTarget { n: usize, lambda1: f64, lambda2: f64 },

    #[error("target sparseness must lie in the open interval (0, 1), got {0}")]
    SigmaOutOfRange(f64),

    #[error("expected a vector of length {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("support of size {support} cannot carry the target norms (squared radius {rho})")]
    InfeasibleSupport { support: usize, rho: f64 },

    #[error("kappa must lie in 1..={n}, got {kappa}")]
    KappaOutOfRange { kappa: usize, n: usize },

    #[error("invalid index set: {0}")]
    InvalidIndexSet(String),

    #[error("point is not in the scaled simplex: {0}")]
    NotInSimplex(String),

    #[error("projection is not differentiable here: {0}")]
    NonDifferentiable(&'static str),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Idx(#[from] IdxError),

    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
}

/// Failures while reading or writing IDX containers.
#[derive(Debug, Error)]
pub enum IdxError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: bad magic number {found:#010x}, expected {expected:#010x}")]
    BadMagic {
        path: PathBuf,
        found: u32,
        expected: u32,
    },

    #[error("{path}: truncated while reading {field} (need {needed} bytes, have {available})")]
    Truncated {
        path: PathBuf,
        field: &'static str,
        needed: usize,
        available: usize,
    },

    #[error("image count {images} does not match label count {labels}")]
    CountMismatch { images: usize, labels: usize },

    #[error("{path}: label {label} at index {index} is out of range")]
    LabelOutOfRange {
        path: PathBuf,
        index: usize,
        label: u8,
    },
}

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("not a checkpoint file (bad magic)")]
    BadMagic,

    #[error("unsupported checkpoint version {0}")]
    UnsupportedVersion(u32),

    #[error("checkpoint is truncated")]
    Truncated,

    #[error("checksum mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    Checksum { stored: u32, computed: u32 },

    #[error("malformed checkpoint: {0}")]
    Malformed(String),
}
