use std::sync::atomic::{AtomicU64, Ordering};

use super::{BitRepr, EncBit, EngineId, GateEngine, StatsCounter};
use crate::error::{Error, Result};
use crate::gate::GateKind;
use crate::scheduler::{Pool, PoolConfig};

/// Cleartext engine with the same scheduling and accounting as the LWE
/// engine. Every gate counts as one (virtual) bootstrap.
#[derive(Debug)]
pub struct ReferenceEngine {
    id: EngineId,
    pool: Pool,
    stats: StatsCounter,
    slots: AtomicU64,
}

impl ReferenceEngine {
    pub fn new(config: PoolConfig) -> Result<Self> {
        Ok(Self {
            id: EngineId::fresh(),
            pool: Pool::new(config)?,
            stats: StatsCounter::default(),
            slots: AtomicU64::new(0),
        })
    }

    fn clear(&self, bit: &EncBit) -> Result<bool> {
        bit.check_engine(self.id)?;
        match bit.repr {
            BitRepr::Clear { value, .. } => Ok(value),
            BitRepr::Lwe(_) => Err(Error::Unsupported("reference")),
        }
    }

    fn make(&self, value: bool, noise: u32) -> EncBit {
        EncBit::new(self.id, BitRepr::Clear { value, noise })
    }
}

impl GateEngine for ReferenceEngine {
    fn id(&self) -> EngineId {
        self.id
    }

    fn name(&self) -> &'static str {
        "reference"
    }

    fn pool(&self) -> &Pool {
        &self.pool
    }

    fn stats_counter(&self) -> &StatsCounter {
        &self.stats
    }

    fn fresh_noise_bound(&self) -> f64 {
        1.0
    }

    fn trivial_bit(&self, value: bool) -> EncBit {
        self.make(value, 0)
    }

    fn encrypt_bit(&self, value: bool) -> EncBit {
        self.make(value, 1)
    }

    fn decrypt_bit(&self, bit: &EncBit) -> Result<bool> {
        self.clear(bit)
    }

    fn negate_bit(&self, bit: &EncBit) -> Result<EncBit> {
        let value = self.clear(bit)?;
        Ok(self.make(!value, bit.noise_bound() as u32))
    }

    fn evaluate_job(&self, kind: GateKind, x: &EncBit, y: &EncBit, _slot: u64) -> Result<EncBit> {
        Ok(self.make(kind.apply(self.clear(x)?, self.clear(y)?), 1))
    }

    fn reserve_slots(&self, count: u64) -> u64 {
        self.slots.fetch_add(count, Ordering::Relaxed)
    }
}
