use thiserror::Error;

use crate::engine::EngineId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("decryption unreliable: noise bound {noise_bound} >= limit {limit}")]
    DecryptionUnreliable { noise_bound: f64, limit: f64 },

    #[error("bootstrap unreliable: noise bound {noise_bound} >= decision margin {margin}")]
    BootstrapUnreliable { noise_bound: f64, margin: f64 },

    #[error("bit belongs to engine {found:?}, expected engine {expected:?}")]
    EngineMismatch { expected: EngineId, found: EngineId },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("width mismatch: {left} vs {right}")]
    WidthMismatch { left: usize, right: usize },

    #[error("invalid bit width {0}")]
    InvalidWidth(usize),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("empty input")]
    EmptyInput,

    #[error("job reads output slot {0} of a batch that has not executed")]
    DependencyViolation(usize),

    #[error("worker count must be at least 1")]
    InvalidWorkers,

    #[error("max batch must be at least 1")]
    InvalidMaxBatch,

    #[error("flat multiplication needs {jobs} gathered gate jobs, limit is {limit}; use Cannon's algorithm")]
    FlatGuard { jobs: usize, limit: usize },

    #[error("operation not supported by the {0} engine")]
    Unsupported(&'static str),

    #[error("malformed encoding: {0}")]
    Codec(String),
}
