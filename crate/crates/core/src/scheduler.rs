//! Deterministic data-parallel execution of gate-job batches and level-wise
//! tree reductions over a configurable worker pool.
//!
//! A batch is split into launches of at most `max_batch` jobs. Each launch
//! reserves a contiguous range of output-slot ids from the engine before it
//! runs; the engine derives an output's fresh noise from its slot id, so the
//! result never depends on which worker evaluated which job.

use std::cell::Cell;
use std::env;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, RwLock};

use rayon::prelude::*;

use crate::engine::{EncBit, GateEngine};
use crate::error::{Error, Result};
use crate::gate::GateKind;

pub const DEFAULT_MAX_BATCH: usize = 4096;
pub const WORKERS_ENV: &str = "WORKERS";
pub const MAX_BATCH_ENV: &str = "MAX_BATCH";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PoolConfig {
    pub workers: usize,
    /// Launch-size cap; larger batches serialize into several launches.
    pub max_batch: usize,
}

impl Default for PoolConfig {
    fn default() -> Self {
        Self {
            workers: std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1),
            max_batch: DEFAULT_MAX_BATCH,
        }
    }
}

impl PoolConfig {
    pub fn new(workers: usize, max_batch: usize) -> Result<Self> {
        let config = Self { workers, max_batch };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.workers == 0 {
            return Err(Error::InvalidWorkers);
        }
        if self.max_batch == 0 {
            return Err(Error::InvalidMaxBatch);
        }
        Ok(())
    }

    /// Defaults overridden by the `WORKERS` and `MAX_BATCH` variables.
    pub fn from_env() -> Result<Self> {
        let mut config = Self::default();
        if let Some(w) = read_env(WORKERS_ENV)? {
            config.workers = w;
        }
        if let Some(m) = read_env(MAX_BATCH_ENV)? {
            config.max_batch = m;
        }
        config.validate()?;
        Ok(config)
    }
}

fn read_env(name: &str) -> Result<Option<usize>> {
    match env::var(name) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::InvalidParams(format!("{name}={v:?} is not a count"))),
        Err(_) => Ok(None),
    }
}

/// Reference to the output of a job that has been pushed but not executed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OutputSlot(usize);

impl OutputSlot {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Copy, Debug)]
pub enum Operand<'a> {
    Bit(&'a EncBit),
    Output(OutputSlot),
}

impl<'a> From<&'a EncBit> for Operand<'a> {
    fn from(bit: &'a EncBit) -> Self {
        Operand::Bit(bit)
    }
}

impl From<OutputSlot> for Operand<'_> {
    fn from(slot: OutputSlot) -> Self {
        Operand::Output(slot)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct GateJob<'a> {
    pub kind: GateKind,
    pub x: &'a EncBit,
    pub y: &'a EncBit,
}

/// Independent gate jobs; outputs come back in push order.
#[derive(Debug, Default)]
pub struct JobBatch<'a> {
    jobs: Vec<GateJob<'a>>,
    single_gates: u64,
    compound_gates: u64,
}

impl<'a> JobBatch<'a> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(jobs: usize) -> Self {
        Self {
            jobs: Vec::with_capacity(jobs),
            ..Self::default()
        }
    }

    fn resolve(op: Operand<'a>) -> Result<&'a EncBit> {
        match op {
            Operand::Bit(bit) => Ok(bit),
            Operand::Output(slot) => Err(Error::DependencyViolation(slot.0)),
        }
    }

    /// Fails if either operand is the pending output of a job.
    pub fn push(
        &mut self,
        kind: GateKind,
        x: impl Into<Operand<'a>>,
        y: impl Into<Operand<'a>>,
    ) -> Result<OutputSlot> {
        let (x, y) = (Self::resolve(x.into())?, Self::resolve(y.into())?);
        Ok(self.push_bits(kind, x, y))
    }

    pub fn push_bits(&mut self, kind: GateKind, x: &'a EncBit, y: &'a EncBit) -> OutputSlot {
        self.jobs.push(GateJob { kind, x, y });
        self.single_gates += 1;
        OutputSlot(self.jobs.len() - 1)
    }

    pub fn push_compound(
        &mut self,
        first: GateKind,
        second: GateKind,
        x: impl Into<Operand<'a>>,
        y: impl Into<Operand<'a>>,
    ) -> Result<(OutputSlot, OutputSlot)> {
        let (x, y) = (Self::resolve(x.into())?, Self::resolve(y.into())?);
        Ok(self.push_compound_bits(first, second, x, y))
    }

    /// Two gates on the same input pair, counted as one compound gate.
    pub fn push_compound_bits(
        &mut self,
        first: GateKind,
        second: GateKind,
        x: &'a EncBit,
        y: &'a EncBit,
    ) -> (OutputSlot, OutputSlot) {
        self.jobs.push(GateJob { kind: first, x, y });
        self.jobs.push(GateJob { kind: second, x, y });
        self.compound_gates += 1;
        let n = self.jobs.len();
        (OutputSlot(n - 2), OutputSlot(n - 1))
    }

    pub fn len(&self) -> usize {
        self.jobs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.jobs.is_empty()
    }

    pub fn jobs(&self) -> &[GateJob<'a>] {
        &self.jobs
    }
}

thread_local! {
    static IN_JOB: Cell<bool> = const { Cell::new(false) };
}

struct JobGuard;

impl JobGuard {
    fn enter() -> Self {
        IN_JOB.with(|f| f.set(true));
        JobGuard
    }
}

impl Drop for JobGuard {
    fn drop(&mut self) {
        IN_JOB.with(|f| f.set(false));
    }
}

struct PoolState {
    config: PoolConfig,
    threads: Option<Arc<rayon::ThreadPool>>,
}

fn build_threads(workers: usize) -> Result<Option<Arc<rayon::ThreadPool>>> {
    if workers == 1 {
        return Ok(None);
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .thread_name(|i| format!("gate-worker-{i}"))
        .build()
        .map(|p| Some(Arc::new(p)))
        .map_err(|e| Error::InvalidParams(format!("cannot start worker pool: {e}")))
}

pub struct Pool {
    state: RwLock<PoolState>,
    last_levels: AtomicUsize,
}

impl std::fmt::Debug for Pool {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Pool").field("config", &self.config()).finish()
    }
}

impl Pool {
    pub fn new(config: PoolConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            state: RwLock::new(PoolState {
                config,
                threads: build_threads(config.workers)?,
            }),
            last_levels: AtomicUsize::new(0),
        })
    }

    pub fn config(&self) -> PoolConfig {
        self.state.read().expect("pool lock poisoned").config
    }

    pub fn workers(&self) -> usize {
        self.config().workers
    }

    pub fn set_workers(&self, workers: usize) -> Result<()> {
        if workers == 0 {
            return Err(Error::InvalidWorkers);
        }
        let threads = build_threads(workers)?;
        let mut state = self.state.write().expect("pool lock poisoned");
        state.config.workers = workers;
        state.threads = threads;
        Ok(())
    }

    pub fn set_max_batch(&self, max_batch: usize) -> Result<()> {
        if max_batch == 0 {
            return Err(Error::InvalidMaxBatch);
        }
        self.state.write().expect("pool lock poisoned").config.max_batch = max_batch;
        Ok(())
    }

    /// Levels executed by the most recent reduction.
    pub fn level_counter(&self) -> usize {
        self.last_levels.load(Ordering::SeqCst)
    }

    fn snapshot(&self) -> (PoolConfig, Option<Arc<rayon::ThreadPool>>) {
        let state = self.state.read().expect("pool lock poisoned");
        (state.config, state.threads.clone())
    }

    /// Evaluates every job of `batch` on `engine`, in launches of at most
    /// `max_batch` jobs. Outputs are in push order.
    pub fn execute_batch<E>(&self, batch: &JobBatch<'_>, engine: &E) -> Result<Vec<EncBit>>
    where
        E: GateEngine + ?Sized,
    {
        if IN_JOB.with(|f| f.get()) {
            return Err(Error::InvalidParams(
                "batches cannot be submitted from inside a gate job".into(),
            ));
        }
        let id = engine.id();
        for job in &batch.jobs {
            job.x.check_engine(id)?;
            job.y.check_engine(id)?;
        }
        let (config, threads) = self.snapshot();
        let mut outputs = Vec::with_capacity(batch.len());
        for launch in batch.jobs.chunks(config.max_batch) {
            let base = engine.reserve_slots(launch.len() as u64);
            let run = |(i, job): (usize, &GateJob<'_>)| {
                let _guard = JobGuard::enter();
                engine.evaluate_job(job.kind, job.x, job.y, base + i as u64)
            };
            let results: Result<Vec<EncBit>> = match &threads {
                Some(pool) => pool.install(|| launch.par_iter().enumerate().map(run).collect()),
                None => launch.iter().enumerate().map(run).collect(),
            };
            outputs.extend(results?);
            engine.stats_counter().record_launch(launch.len() as u64);
        }
        engine.stats_counter().record_jobs(
            batch.single_gates,
            batch.compound_gates,
            batch.len() as u64,
        );
        Ok(outputs)
    }

    /// Pairwise tree reduction with `combine` applied to the pairs of each
    /// level in parallel. `combine` must not submit batches to this pool.
    pub fn parallel_reduce<T, F>(&self, items: Vec<T>, combine: F) -> Result<T>
    where
        T: Send,
        F: Fn(T, T) -> T + Send + Sync,
    {
        let (_, threads) = self.snapshot();
        let mut out = self.reduce_groups(vec![items], |pairs| {
            Ok(match &threads {
                Some(pool) => pool.install(|| {
                    pairs.into_par_iter().map(|(a, b)| combine(a, b)).collect()
                }),
                None => pairs.into_iter().map(|(a, b)| combine(a, b)).collect(),
            })
        })?;
        Ok(out.pop().expect("one group in, one result out"))
    }

    /// Pairwise tree reduction where all pairs of a level are handed to
    /// `combine_level` at once, so it can issue them as shared batches.
    pub fn reduce_levels<T, F>(&self, items: Vec<T>, combine_level: F) -> Result<T>
    where
        F: FnMut(Vec<(T, T)>) -> Result<Vec<T>>,
    {
        let mut out = self.reduce_groups(vec![items], combine_level)?;
        Ok(out.pop().expect("one group in, one result out"))
    }

    /// Reduces several independent groups side by side: level `i` of every
    /// group is combined in the same `combine_level` call. Each group of `k`
    /// items finishes after `ceil(log2 k)` levels; an odd item at the end of
    /// a level passes through unchanged. The result equals the left fold of
    /// each group for any associative combination.
    pub fn reduce_groups<T, F>(&self, groups: Vec<Vec<T>>, mut combine_level: F) -> Result<Vec<T>>
    where
        F: FnMut(Vec<(T, T)>) -> Result<Vec<T>>,
    {
        if groups.is_empty() || groups.iter().any(Vec::is_empty) {
            return Err(Error::EmptyInput);
        }
        let mut groups = groups;
        let mut levels = 0;
        while groups.iter().any(|g| g.len() > 1) {
            let mut pairs = Vec::new();
            let mut shape = Vec::with_capacity(groups.len());
            let mut carried = Vec::with_capacity(groups.len());
            for group in groups {
                let (group_pairs, odd) = pair_up(group);
                shape.push(group_pairs.len());
                pairs.extend(group_pairs);
                carried.push(odd);
            }
            let expected = pairs.len();
            let combined = combine_level(pairs)?;
            if combined.len() != expected {
                return Err(Error::LengthMismatch {
                    left: combined.len(),
                    right: expected,
                });
            }
            let mut combined = combined.into_iter();
            groups = shape
                .into_iter()
                .zip(carried)
                .map(|(count, odd)| {
                    let mut next: Vec<T> = combined.by_ref().take(count).collect();
                    next.extend(odd);
                    next
                })
                .collect();
            levels += 1;
        }
        self.last_levels.store(levels, Ordering::SeqCst);
        Ok(groups
            .into_iter()
            .map(|mut g| g.pop().expect("non-empty group"))
            .collect())
    }
}

fn pair_up<T>(items: Vec<T>) -> (Vec<(T, T)>, Option<T>) {
    let mut pairs = Vec::with_capacity(items.len() / 2);
    let mut iter = items.into_iter();
    loop {
        match (iter.next(), iter.next()) {
            (Some(a), Some(b)) => pairs.push((a, b)),
            (odd, _) => return (pairs, odd),
        }
    }
}

/// `ceil(log2 k)` for `k >= 1`.
pub fn tree_depth(k: usize) -> usize {
    assert!(k >= 1);
    (usize::BITS - (k - 1).leading_zeros()) as usize
}
