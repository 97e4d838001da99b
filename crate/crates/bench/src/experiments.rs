//! The experiment grid. Every runner times only the encrypted computation,
//! then checks each output against native arithmetic and marks the row.

use std::time::Instant;

use fhe_circuits::engine::{EncBit, GateEngine};
use fhe_circuits::int::{self, KARATSUBA_THRESHOLD};
use fhe_circuits::linalg::{self, EncryptedIntVector, EncryptedMatrix};
use fhe_circuits::{Error, GateKind, GateStats};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::BenchError;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchResult {
    pub experiment: String,
    pub n: usize,
    /// Vector length or matrix rank; 1 for scalar experiments.
    pub size: usize,
    pub engine: String,
    pub workers: usize,
    pub seconds: f64,
    pub single_gates: u64,
    pub compound_gates: u64,
    pub bootstraps: u64,
    pub batch_launches: u64,
    pub correct: bool,
}

impl BenchResult {
    fn new(engine: &dyn GateEngine, experiment: String, n: usize, size: usize, seconds: f64, correct: bool) -> Self {
        let GateStats {
            single_gates,
            compound_gates,
            bootstraps,
            batch_launches,
            ..
        } = engine.stats();
        Self {
            experiment,
            n,
            size,
            engine: engine.name().to_owned(),
            workers: engine.pool().workers(),
            seconds,
            single_gates,
            compound_gates,
            bootstraps,
            batch_launches,
            correct,
        }
    }
}

fn mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1 << n) - 1
    }
}

/// Resets stats, runs `f`, and returns its value with the elapsed seconds.
fn timed<T>(engine: &dyn GateEngine, f: impl FnOnce() -> Result<T, Error>) -> Result<(T, f64), BenchError> {
    engine.reset_stats();
    let start = Instant::now();
    let out = f()?;
    Ok((out, start.elapsed().as_secs_f64()))
}

fn random_bits(engine: &dyn GateEngine, rng: &mut ChaCha8Rng, n: usize) -> (Vec<bool>, Vec<EncBit>) {
    let plain: Vec<bool> = (0..n).map(|_| rng.random()).collect();
    let enc = plain.iter().map(|&b| engine.encrypt_bit(b)).collect();
    (plain, enc)
}

fn decrypt_bits(engine: &dyn GateEngine, bits: &[EncBit]) -> Result<Vec<bool>, BenchError> {
    Ok(bits.iter().map(|b| engine.decrypt_bit(b)).collect::<Result<_, _>>()?)
}

/// One coalesced `n`-bit batch per `(n, kind)`.
pub fn gate_bench(
    engine: &dyn GateEngine,
    widths: &[usize],
    kinds: &[GateKind],
    rng: &mut ChaCha8Rng,
) -> Result<Vec<BenchResult>, BenchError> {
    let mut rows = Vec::new();
    for &n in widths {
        if !(1..=64).contains(&n) {
            return Err(BenchError::Usage(format!("gate batch width must be 1..=64, got {n}")));
        }
        for &kind in kinds {
            let (px, x) = random_bits(engine, rng, n);
            let (py, y) = random_bits(engine, rng, n);
            let (out, secs) = timed(engine, || engine.eval_gate_batch(kind, &x, &y))?;
            let got = decrypt_bits(engine, &out)?;
            let correct = got.iter().zip(px.iter().zip(&py)).all(|(&g, (&a, &b))| g == kind.apply(a, b));
            rows.push(BenchResult::new(engine, format!("gate-{}", kind.name().to_lowercase()), n, 1, secs, correct));
        }
    }
    Ok(rows)
}

/// Per `n`: one compound (AND, XOR) launch over `n` bit pairs, then the same
/// two gates as two single-gate launches. Both rows are correct only if the
/// two routes agree with each other and with the truth tables.
pub fn compound_bench(
    engine: &dyn GateEngine,
    widths: &[usize],
    rng: &mut ChaCha8Rng,
) -> Result<Vec<BenchResult>, BenchError> {
    let mut rows = Vec::new();
    for &n in widths {
        if n == 0 {
            return Err(BenchError::Usage("compound width must be positive".into()));
        }
        let (px, x) = random_bits(engine, rng, n);
        let (py, y) = random_bits(engine, rng, n);
        let ((c_and, c_xor), c_secs) =
            timed(engine, || engine.eval_compound_batch(GateKind::And, GateKind::Xor, &x, &y))?;
        let compound = BenchResult::new(engine, "compound".into(), n, 1, c_secs, true);
        let ((s_and, s_xor), s_secs) = timed(engine, || {
            Ok((
                engine.eval_gate_batch(GateKind::And, &x, &y)?,
                engine.eval_gate_batch(GateKind::Xor, &x, &y)?,
            ))
        })?;
        let pair = BenchResult::new(engine, "single-pair".into(), n, 1, s_secs, true);

        let want_and: Vec<bool> = px.iter().zip(&py).map(|(a, b)| a & b).collect();
        let want_xor: Vec<bool> = px.iter().zip(&py).map(|(a, b)| a ^ b).collect();
        let correct = decrypt_bits(engine, &c_and)? == want_and
            && decrypt_bits(engine, &c_xor)? == want_xor
            && decrypt_bits(engine, &s_and)? == want_and
            && decrypt_bits(engine, &s_xor)? == want_xor;
        rows.push(BenchResult { correct, ..compound });
        rows.push(BenchResult { correct, ..pair });
    }
    Ok(rows)
}

/// Launch savings of compound over single-pair rows, per `n`, in input order.
pub fn compound_launch_ratios(rows: &[BenchResult]) -> Vec<(usize, f64)> {
    rows.chunks_exact(2)
        .map(|p| (p[0].n, p[1].batch_launches as f64 / p[0].batch_launches as f64))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum AddVariant {
    Bitwise,
    Numberwise,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum MulAlgorithm {
    Naive,
    Karatsuba,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum MatmulAlgorithm {
    Flat,
    Cannon,
}

fn random_vector(
    engine: &dyn GateEngine,
    rng: &mut ChaCha8Rng,
    n: usize,
    len: usize,
) -> Result<(Vec<u64>, EncryptedIntVector), BenchError> {
    let plain: Vec<u64> = (0..len).map(|_| rng.random::<u64>() & mask(n)).collect();
    let signed: Vec<i64> = plain.iter().map(|&v| v as i64).collect();
    Ok((plain, EncryptedIntVector::encrypt(engine, &signed, n)?))
}

/// `len` independent additions: the scalar adder when `len == 1`, the
/// bit-sliced vector addition otherwise.
pub fn add_bench(
    engine: &dyn GateEngine,
    n: usize,
    variant: AddVariant,
    len: usize,
    rng: &mut ChaCha8Rng,
) -> Result<BenchResult, BenchError> {
    if !(1..=64).contains(&n) || len == 0 {
        return Err(BenchError::Usage(format!("add needs 1 <= n <= 64 and len >= 1, got n={n} len={len}")));
    }
    let (a, x) = random_vector(engine, rng, n, len)?;
    let (b, y) = random_vector(engine, rng, n, len)?;
    let (sum, secs) = timed(engine, || match (variant, len) {
        (AddVariant::Bitwise, 1) => Ok(vec![int::add_bitwise(engine, &x.elems()[0], &y.elems()[0])?]),
        (AddVariant::Numberwise, 1) => Ok(vec![int::add_numberwise(engine, &x.elems()[0], &y.elems()[0])?]),
        (AddVariant::Bitwise, _) => linalg::vec_add(engine, &x, &y).map(EncryptedIntVector::into_elems),
        (AddVariant::Numberwise, _) => linalg::vec_add_numberwise(engine, &x, &y).map(EncryptedIntVector::into_elems),
    })?;
    let mut correct = true;
    for ((s, a), b) in sum.iter().zip(&a).zip(&b) {
        correct &= s.decrypt_unsigned(engine)? == a.wrapping_add(*b) & mask(n);
    }
    let name = match variant {
        AddVariant::Bitwise => "add-bitwise",
        AddVariant::Numberwise => "add-numberwise",
    };
    Ok(BenchResult::new(engine, name.into(), n, len, secs, correct))
}

/// Whether one level of Karatsuba applies at width `n`.
pub fn karatsuba_supported(n: usize) -> bool {
    n.is_power_of_two() && n >= KARATSUBA_THRESHOLD
}

/// `len` independent `2n`-bit products of random unsigned operands.
pub fn mul_bench(
    engine: &dyn GateEngine,
    n: usize,
    algorithm: MulAlgorithm,
    len: usize,
    rng: &mut ChaCha8Rng,
) -> Result<BenchResult, BenchError> {
    if !(1..=32).contains(&n) || len == 0 {
        return Err(BenchError::Usage(format!("mul needs 1 <= n <= 32 and len >= 1, got n={n} len={len}")));
    }
    if algorithm == MulAlgorithm::Karatsuba && !karatsuba_supported(n) {
        return Err(BenchError::Unsupported(format!(
            "karatsuba needs a power-of-two width of at least {KARATSUBA_THRESHOLD} (e.g. 16 or 32), got {n}"
        )));
    }
    let (a, x) = random_vector(engine, rng, n, len)?;
    let (b, y) = random_vector(engine, rng, n, len)?;
    let (prod, secs) = timed(engine, || match algorithm {
        MulAlgorithm::Naive => linalg::vec_mul(engine, &x, &y),
        MulAlgorithm::Karatsuba => linalg::vec_mul_karatsuba(engine, &x, &y),
    })?;
    let got = prod.decrypt_unsigned(engine)?;
    let correct = got.iter().zip(a.iter().zip(&b)).all(|(&p, (&a, &b))| p == a * b);
    let name = match algorithm {
        MulAlgorithm::Naive => "mul-naive",
        MulAlgorithm::Karatsuba => "mul-karatsuba",
    };
    Ok(BenchResult::new(engine, name.into(), n, len, secs, correct))
}

/// Native `q x q` product mod `2^n`.
pub fn plain_matmul(x: &[u64], y: &[u64], q: usize, n: usize) -> Vec<u64> {
    (0..q * q)
        .map(|idx| {
            let (i, j) = (idx / q, idx % q);
            (0..q).fold(0u64, |acc, t| acc.wrapping_add(x[i * q + t].wrapping_mul(y[t * q + j]))) & mask(n)
        })
        .collect()
}

/// Random `q x q` product with the flat or Cannon schedule.
pub fn matmul_bench(
    engine: &dyn GateEngine,
    q: usize,
    n: usize,
    algorithm: MatmulAlgorithm,
    rng: &mut ChaCha8Rng,
) -> Result<BenchResult, BenchError> {
    if q == 0 || !(1..=32).contains(&n) {
        return Err(BenchError::Usage(format!("matmul needs q >= 1 and 1 <= n <= 32, got q={q} n={n}")));
    }
    let xs: Vec<u64> = (0..q * q).map(|_| rng.random::<u64>() & mask(n)).collect();
    let ys: Vec<u64> = (0..q * q).map(|_| rng.random::<u64>() & mask(n)).collect();
    let as_i64 = |v: &[u64]| v.iter().map(|&e| e as i64).collect::<Vec<_>>();
    let x = EncryptedMatrix::encrypt(engine, q, q, &as_i64(&xs), n)?;
    let y = EncryptedMatrix::encrypt(engine, q, q, &as_i64(&ys), n)?;
    let result = timed(engine, || match algorithm {
        MatmulAlgorithm::Flat => linalg::mat_mul_flat(engine, &x, &y),
        MatmulAlgorithm::Cannon => linalg::mat_mul_cannon(engine, &x, &y),
    });
    let (z, secs) = match result {
        Err(BenchError::Core(Error::FlatGuard { jobs, limit })) => {
            return Err(BenchError::Usage(format!(
                "flat matrix product needs {jobs} AND jobs, at or above the limit {limit}; use --algorithm cannon"
            )))
        }
        other => other?,
    };
    let correct = z.decrypt_unsigned(engine)? == plain_matmul(&xs, &ys, q, n);
    let name = match algorithm {
        MatmulAlgorithm::Flat => "matmul-flat",
        MatmulAlgorithm::Cannon => "matmul-cannon",
    };
    Ok(BenchResult::new(engine, name.into(), n, q, secs, correct))
}
