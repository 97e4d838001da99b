//! Bit-level homomorphic arithmetic over LWE-encrypted integers.
//!
//! Layers, bottom up: torus arithmetic, LWE samples, boolean gates evaluated
//! by a [`GateEngine`], a batch scheduler, and integer, vector, and matrix
//! circuits built from coalesced gate batches.

pub mod codec;
pub mod engine;
pub mod error;
pub mod gate;
pub mod int;
pub mod linalg;
pub mod lwe;
pub mod scheduler;
pub mod torus;

pub use engine::{EncBit, GateEngine, GateStats, OracleBootstrapEngine, ReferenceEngine};
pub use error::{Error, Result};
pub use gate::GateKind;
pub use int::EncryptedInt;
pub use linalg::{EncryptedIntVector, EncryptedMatrix};
pub use lwe::{LweParams, LweSample, SecretKey};
pub use scheduler::{JobBatch, Pool, PoolConfig};
pub use torus::{Torus, Torus32};
