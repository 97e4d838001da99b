//! Experiment driver for the encrypted arithmetic circuits: gate, compound
//! gate, addition, multiplication, and matrix benchmarks, plus linear
//! regression on encrypted data.

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use fhe_circuits::codec;
use fhe_circuits::engine::{GateEngine, OracleBootstrapEngine, ReferenceEngine};
use fhe_circuits::PoolConfig;

pub mod dataset;
pub mod experiments;
pub mod linreg;
pub mod report;

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error(transparent)]
    Core(#[from] fhe_circuits::Error),
    #[error("{0}")]
    Usage(String),
    #[error("bad input data: {0}")]
    Data(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("X^T X is singular (no pivot in column {rank_deficient_at}); attributes are linearly dependent or there are fewer rows than attributes")]
    Singular { rank_deficient_at: usize },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("correctness check failed: {0}")]
    Mismatch(String),
}

impl BenchError {
    /// 1 for a correctness mismatch, 2 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Mismatch(_) => 1,
            _ => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum EngineKind {
    Reference,
    OracleLwe,
}

/// Builds the selected engine. The LWE engine reads its parameters and
/// secret key from `key_path` and seeds its noise streams with `seed`.
pub fn build_engine(
    kind: EngineKind,
    key_path: Option<&Path>,
    seed: u64,
    config: PoolConfig,
) -> Result<Box<dyn GateEngine>, BenchError> {
    match kind {
        EngineKind::Reference => Ok(Box::new(ReferenceEngine::new(config)?)),
        EngineKind::OracleLwe => {
            let path = key_path.ok_or_else(|| {
                BenchError::Usage(
                    "the oracle-lwe engine needs --key <FILE>; create one with `fhe-bench keygen <FILE>`".into(),
                )
            })?;
            let file = File::open(path)
                .map_err(|e| BenchError::Usage(format!("cannot open key file {}: {e}", path.display())))?;
            let (params, key) = codec::read_key(&mut BufReader::new(file))?;
            Ok(Box::new(OracleBootstrapEngine::new(key, params, seed, config)?))
        }
    }
}
