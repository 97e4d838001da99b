//! Gate engines: the pluggable evaluators for single, compound, and batched
//! boolean gates on encrypted bits.
//!
//! Two engines share one contract:
//!
//! * [`ReferenceEngine`] keeps bits in the clear and is used for fast
//!   exhaustive checks of circuit logic.
//! * [`OracleBootstrapEngine`] works on real LWE samples. Each gate is an
//!   integer-linear combination of its inputs followed by a bootstrap. The
//!   bootstrap is modeled by an oracle that holds the secret key, decrypts
//!   the phase, and re-encrypts with fresh noise. It is a functional model of
//!   gate bootstrapping, NOT a secure cryptosystem.
//!
//! Engines own their [`GateStats`]; every batch execution updates them.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gate::GateKind;
use crate::lwe::LweSample;
use crate::scheduler::{JobBatch, Pool};

mod oracle;
mod reference;

pub use oracle::OracleBootstrapEngine;
pub use reference::ReferenceEngine;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct EngineId(u64);

impl EngineId {
    pub(crate) fn fresh() -> Self {
        static NEXT: AtomicU64 = AtomicU64::new(1);
        EngineId(NEXT.fetch_add(1, Ordering::Relaxed))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum BitRepr {
    /// Reference engine: the bit itself and a phantom noise level.
    Clear { value: bool, noise: u32 },
    Lwe(Arc<LweSample>),
}

/// An encrypted bit, tagged with the engine instance that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct EncBit {
    engine: EngineId,
    repr: BitRepr,
}

impl EncBit {
    pub(crate) fn new(engine: EngineId, repr: BitRepr) -> Self {
        Self { engine, repr }
    }

    pub fn engine_id(&self) -> EngineId {
        self.engine
    }

    pub fn repr(&self) -> &BitRepr {
        &self.repr
    }

    pub fn as_lwe(&self) -> Option<&LweSample> {
        match &self.repr {
            BitRepr::Lwe(s) => Some(s),
            BitRepr::Clear { .. } => None,
        }
    }

    pub fn noise_bound(&self) -> f64 {
        match &self.repr {
            BitRepr::Lwe(s) => s.noise_bound(),
            BitRepr::Clear { noise, .. } => *noise as f64,
        }
    }

    pub(crate) fn check_engine(&self, expected: EngineId) -> Result<()> {
        if self.engine != expected {
            return Err(Error::EngineMismatch {
                expected,
                found: self.engine,
            });
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateStats {
    pub single_gates: u64,
    pub compound_gates: u64,
    pub bootstraps: u64,
    pub batch_launches: u64,
    pub largest_batch: u64,
    /// Gate-free NOTs.
    pub negations: u64,
}

impl GateStats {
    /// Flat key -> count record.
    pub fn to_record(&self) -> Vec<(&'static str, u64)> {
        vec![
            ("single_gates", self.single_gates),
            ("compound_gates", self.compound_gates),
            ("bootstraps", self.bootstraps),
            ("batch_launches", self.batch_launches),
            ("largest_batch", self.largest_batch),
            ("negations", self.negations),
        ]
    }
}

#[derive(Debug, Default)]
pub struct StatsCounter {
    single_gates: AtomicU64,
    compound_gates: AtomicU64,
    bootstraps: AtomicU64,
    batch_launches: AtomicU64,
    largest_batch: AtomicU64,
    negations: AtomicU64,
}

impl StatsCounter {
    pub(crate) fn record_launch(&self, jobs: u64) {
        self.batch_launches.fetch_add(1, Ordering::Relaxed);
        self.largest_batch.fetch_max(jobs, Ordering::Relaxed);
    }

    pub(crate) fn record_jobs(&self, singles: u64, compounds: u64, bootstraps: u64) {
        self.single_gates.fetch_add(singles, Ordering::Relaxed);
        self.compound_gates.fetch_add(compounds, Ordering::Relaxed);
        self.bootstraps.fetch_add(bootstraps, Ordering::Relaxed);
    }

    pub(crate) fn record_negation(&self) {
        self.negations.fetch_add(1, Ordering::Relaxed);
    }

    pub(crate) fn record_bootstrap(&self) {
        self.bootstraps.fetch_add(1, Ordering::Relaxed);
    }

    pub fn snapshot(&self) -> GateStats {
        GateStats {
            single_gates: self.single_gates.load(Ordering::Relaxed),
            compound_gates: self.compound_gates.load(Ordering::Relaxed),
            bootstraps: self.bootstraps.load(Ordering::Relaxed),
            batch_launches: self.batch_launches.load(Ordering::Relaxed),
            largest_batch: self.largest_batch.load(Ordering::Relaxed),
            negations: self.negations.load(Ordering::Relaxed),
        }
    }

    pub fn reset(&self) {
        for c in [
            &self.single_gates,
            &self.compound_gates,
            &self.bootstraps,
            &self.batch_launches,
            &self.largest_batch,
            &self.negations,
        ] {
            c.store(0, Ordering::Relaxed);
        }
    }
}

pub trait GateEngine: Send + Sync {
    fn id(&self) -> EngineId;

    /// Short identifier used in reports (`reference`, `oracle-lwe`).
    fn name(&self) -> &'static str;

    fn pool(&self) -> &Pool;

    fn stats_counter(&self) -> &StatsCounter;

    /// Noise bound of every gate output.
    fn fresh_noise_bound(&self) -> f64;

    /// Noiseless constant.
    fn trivial_bit(&self, value: bool) -> EncBit;

    fn encrypt_bit(&self, value: bool) -> EncBit;

    fn decrypt_bit(&self, bit: &EncBit) -> Result<bool>;

    /// Gate-free NOT; does not touch the stats.
    fn negate_bit(&self, bit: &EncBit) -> Result<EncBit>;

    /// Evaluates one bootstrapped gate. `slot` identifies the output and
    /// seeds its fresh noise. Does not touch the stats.
    fn evaluate_job(&self, kind: GateKind, x: &EncBit, y: &EncBit, slot: u64) -> Result<EncBit>;

    /// Reserves `count` consecutive output-slot ids and returns the first.
    fn reserve_slots(&self, count: u64) -> u64;

    fn stats(&self) -> GateStats {
        self.stats_counter().snapshot()
    }

    fn reset_stats(&self) {
        self.stats_counter().reset()
    }

    fn execute(&self, batch: &JobBatch<'_>) -> Result<Vec<EncBit>> {
        self.pool().execute_batch(batch, self)
    }

    fn not(&self, x: &EncBit) -> Result<EncBit> {
        x.check_engine(self.id())?;
        let out = self.negate_bit(x)?;
        self.stats_counter().record_negation();
        Ok(out)
    }

    fn eval_gate(&self, kind: GateKind, x: &EncBit, y: &EncBit) -> Result<EncBit> {
        let mut batch = JobBatch::with_capacity(1);
        batch.push_bits(kind, x, y);
        Ok(self.execute(&batch)?.pop().expect("one job, one output"))
    }

    /// `(first(x, y), second(x, y))` as one launch of two jobs.
    fn eval_compound(
        &self,
        first: GateKind,
        second: GateKind,
        x: &EncBit,
        y: &EncBit,
    ) -> Result<(EncBit, EncBit)> {
        let mut batch = JobBatch::with_capacity(2);
        batch.push_compound_bits(first, second, x, y);
        let mut out = self.execute(&batch)?.into_iter();
        Ok((out.next().expect("two outputs"), out.next().expect("two outputs")))
    }

    /// Elementwise gate over coalesced bits.
    fn eval_gate_batch(&self, kind: GateKind, xs: &[EncBit], ys: &[EncBit]) -> Result<Vec<EncBit>> {
        check_lengths(xs, ys)?;
        let mut batch = JobBatch::with_capacity(xs.len());
        for (x, y) in xs.iter().zip(ys) {
            batch.push_bits(kind, x, y);
        }
        self.execute(&batch)
    }

    /// Elementwise compound gate: one launch of `2 * len` jobs.
    fn eval_compound_batch(
        &self,
        first: GateKind,
        second: GateKind,
        xs: &[EncBit],
        ys: &[EncBit],
    ) -> Result<(Vec<EncBit>, Vec<EncBit>)> {
        check_lengths(xs, ys)?;
        let mut batch = JobBatch::with_capacity(2 * xs.len());
        for (x, y) in xs.iter().zip(ys) {
            batch.push_compound_bits(first, second, x, y);
        }
        let out = self.execute(&batch)?;
        let mut firsts = Vec::with_capacity(xs.len());
        let mut seconds = Vec::with_capacity(xs.len());
        for pair in out.chunks_exact(2) {
            firsts.push(pair[0].clone());
            seconds.push(pair[1].clone());
        }
        Ok((firsts, seconds))
    }
}

fn check_lengths(xs: &[EncBit], ys: &[EncBit]) -> Result<()> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    if xs.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(())
}
