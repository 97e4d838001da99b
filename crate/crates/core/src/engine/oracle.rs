use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{BitRepr, EncBit, EngineId, GateEngine, StatsCounter};
use crate::error::{Error, Result};
use crate::gate::GateKind;
use crate::lwe::{self, decode_phase, LweParams, LweSample, SecretKey};
use crate::scheduler::{Pool, PoolConfig};
use crate::torus::Torus32;

/// Stream ids at or above this value seed input encryptions; below it they
/// seed bootstrapped gate outputs.
const INPUT_STREAM: u64 = 1 << 63;

/// LWE engine whose bootstrap is a key-holding oracle: it decrypts the
/// phase of the gate's linear combination and re-encrypts the result with
/// fresh noise. Functionally equivalent to gate bootstrapping; offers no
/// security, since the evaluator holds the secret key.
pub struct OracleBootstrapEngine {
    id: EngineId,
    key: SecretKey,
    params: LweParams,
    seed: [u8; 32],
    pool: Pool,
    stats: StatsCounter,
    slots: AtomicU64,
    input_slots: AtomicU64,
    zero: Arc<LweSample>,
    one: Arc<LweSample>,
}

impl std::fmt::Debug for OracleBootstrapEngine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OracleBootstrapEngine")
            .field("id", &self.id)
            .field("params", &self.params)
            .finish_non_exhaustive()
    }
}

/// Checks that every gate's noiseless combination decodes to its truth
/// table with at least the decision margin, and that the worst-case noise of
/// a combination of fresh outputs stays below that margin.
fn validate_gate_table(params: &LweParams) -> Result<()> {
    let margin = params.decision_margin();
    let half = Torus32::from_f64(0.5);
    for kind in GateKind::ALL {
        let lin = kind.linearization();
        let worst_noise = lin.l1_norm() as f64 * params.fresh_noise_bound();
        if worst_noise >= margin {
            return Err(Error::InvalidParams(format!(
                "{kind} combination noise {worst_noise} reaches the decision margin {margin}"
            )));
        }
        for x in [false, true] {
            for y in [false, true] {
                let phase = params.encode(x).mul_int(lin.coeffs[0])
                    + params.encode(y).mul_int(lin.coeffs[1])
                    + params.mu.mul_int(lin.offset_mu);
                let distance = phase
                    .to_signed_f64()
                    .abs()
                    .min((phase - half).to_signed_f64().abs());
                if decode_phase(phase) != kind.apply(x, y) || distance < margin {
                    return Err(Error::InvalidParams(format!(
                        "gate {kind} does not linearize under mu = {}",
                        params.mu.to_f64()
                    )));
                }
            }
        }
    }
    Ok(())
}

impl OracleBootstrapEngine {
    pub fn new(key: SecretKey, params: LweParams, seed: u64, config: PoolConfig) -> Result<Self> {
        params.validate()?;
        if key.dimension() != params.dimension {
            return Err(Error::DimensionMismatch {
                expected: params.dimension,
                found: key.dimension(),
            });
        }
        validate_gate_table(&params)?;
        let mut seed_bytes = [0u8; 32];
        seed_bytes[..8].copy_from_slice(&seed.to_le_bytes());
        seed_bytes[8..16].copy_from_slice(&0x6f72_6163_6c65_u64.to_le_bytes());
        Ok(Self {
            id: EngineId::fresh(),
            zero: Arc::new(LweSample::trivial(params.dimension, params.encode(false))),
            one: Arc::new(LweSample::trivial(params.dimension, params.encode(true))),
            key,
            params,
            seed: seed_bytes,
            pool: Pool::new(config)?,
            stats: StatsCounter::default(),
            slots: AtomicU64::new(0),
            input_slots: AtomicU64::new(0),
        })
    }

    pub fn params(&self) -> &LweParams {
        &self.params
    }

    pub fn key(&self) -> &SecretKey {
        &self.key
    }

    fn rng_for(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.seed);
        rng.set_stream(stream);
        rng
    }

    fn sample<'a>(&self, bit: &'a EncBit) -> Result<&'a LweSample> {
        bit.check_engine(self.id)?;
        bit.as_lwe().ok_or(Error::Unsupported("oracle-lwe"))
    }

    /// Tags an externally produced sample as belonging to this engine.
    pub fn import(&self, sample: LweSample) -> Result<EncBit> {
        if sample.dimension() != self.params.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.params.dimension,
                found: sample.dimension(),
            });
        }
        Ok(EncBit::new(self.id, BitRepr::Lwe(Arc::new(sample))))
    }

    /// Decrypts the phase sign and re-encrypts it with fresh noise drawn
    /// from the output slot's stream.
    fn bootstrap_slot(&self, c: &LweSample, slot: u64) -> Result<LweSample> {
        let margin = self.params.decision_margin();
        if c.noise_bound() >= margin {
            return Err(Error::BootstrapUnreliable {
                noise_bound: c.noise_bound(),
                margin,
            });
        }
        let bit = decode_phase(lwe::phase(&self.key, c)?);
        lwe::encrypt_bit(&self.key, bit, &self.params, &mut self.rng_for(slot & !INPUT_STREAM))
    }

    /// Noise-resetting re-encryption of `c`; counts one bootstrap.
    pub fn bootstrap(&self, c: &LweSample) -> Result<LweSample> {
        let slot = self.reserve_slots(1);
        let out = self.bootstrap_slot(c, slot)?;
        self.stats.record_bootstrap();
        Ok(out)
    }
}

impl GateEngine for OracleBootstrapEngine {
    fn id(&self) -> EngineId {
        self.id
    }

    fn name(&self) -> &'static str {
        "oracle-lwe"
    }

    fn pool(&self) -> &Pool {
        &self.pool
    }

    fn stats_counter(&self) -> &StatsCounter {
        &self.stats
    }

    fn fresh_noise_bound(&self) -> f64 {
        self.params.fresh_noise_bound()
    }

    fn trivial_bit(&self, value: bool) -> EncBit {
        let sample = if value { &self.one } else { &self.zero };
        EncBit::new(self.id, BitRepr::Lwe(Arc::clone(sample)))
    }

    fn encrypt_bit(&self, value: bool) -> EncBit {
        let stream = INPUT_STREAM | self.input_slots.fetch_add(1, Ordering::Relaxed);
        let sample = lwe::encrypt_bit(&self.key, value, &self.params, &mut self.rng_for(stream))
            .expect("engine key matches its params");
        EncBit::new(self.id, BitRepr::Lwe(Arc::new(sample)))
    }

    fn decrypt_bit(&self, bit: &EncBit) -> Result<bool> {
        lwe::decrypt_bit(&self.key, self.sample(bit)?, &self.params)
    }

    fn negate_bit(&self, bit: &EncBit) -> Result<EncBit> {
        let negated = self.sample(bit)?.negate();
        Ok(EncBit::new(self.id, BitRepr::Lwe(Arc::new(negated))))
    }

    fn evaluate_job(&self, kind: GateKind, x: &EncBit, y: &EncBit, slot: u64) -> Result<EncBit> {
        let lin = kind.linearization();
        let combined = lwe::lwe_linear(
            &[self.sample(x)?, self.sample(y)?],
            &lin.coeffs,
            self.params.mu.mul_int(lin.offset_mu),
        )?;
        let fresh = self.bootstrap_slot(&combined, slot)?;
        Ok(EncBit::new(self.id, BitRepr::Lwe(Arc::new(fresh))))
    }

    fn reserve_slots(&self, count: u64) -> u64 {
        self.slots.fetch_add(count, Ordering::Relaxed)
    }
}
