//! Linear regression through encrypted normal-equation aggregates.
//!
//! `X^T X` and `X^T y` are computed under encryption as grouped dot
//! products, decrypted, and the `d x d` system is solved in exact rational
//! arithmetic. The model has no intercept term; add a constant column to
//! the data if one is wanted.

use std::time::Instant;

use fhe_circuits::engine::GateEngine;
use fhe_circuits::int::EncryptedInt;
use fhe_circuits::linalg;
use fhe_circuits::GateStats;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use crate::dataset::{Dataset, ValueKind};
use crate::BenchError;

/// Gaussian elimination over the rationals. Fails on a singular system.
pub fn solve_exact(a: &[Vec<i128>], b: &[i128]) -> Result<Vec<BigRational>, BenchError> {
    let d = b.len();
    let q = |v: i128| BigRational::from_integer(BigInt::from(v));
    let mut m: Vec<Vec<BigRational>> = a
        .iter()
        .zip(b)
        .map(|(row, &rhs)| row.iter().map(|&v| q(v)).chain([q(rhs)]).collect())
        .collect();
    if m.len() != d || m.iter().any(|r| r.len() != d + 1) {
        return Err(BenchError::Usage("normal equations must be square".into()));
    }
    for col in 0..d {
        let pivot = (col..d)
            .find(|&r| !m[r][col].is_zero())
            .ok_or(BenchError::Singular { rank_deficient_at: col })?;
        m.swap(col, pivot);
        let lead = m[col][col].clone();
        for v in &mut m[col][col..] {
            *v /= &lead;
        }
        let pivot_row = m[col].clone();
        for (r, row) in m.iter_mut().enumerate() {
            if r == col || row[col].is_zero() {
                continue;
            }
            let factor = row[col].clone();
            for (v, p) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                *v -= &factor * p;
            }
        }
    }
    Ok(m.into_iter().map(|mut r| r.pop().expect("augmented column")).collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct Aggregates {
    pub xtx: Vec<Vec<i128>>,
    pub xty: Vec<i128>,
}

#[derive(Clone, Debug)]
pub struct LinregOutcome {
    pub coefficients: Vec<BigRational>,
    pub encrypted: Aggregates,
    /// Encrypted aggregates equal the cleartext ones.
    pub correct: bool,
    pub seconds: f64,
    pub stats: GateStats,
}

fn bits_needed(v: i128) -> u32 {
    128 - v.unsigned_abs().leading_zeros()
}

/// Chooses the encrypted representation and checks that values and sums fit.
/// Returns the operand width: `n` when every value is non-negative (products
/// at `2n` bits), `2n` when some value is negative (sign-extended operands,
/// products truncated back to `2n` bits).
fn operand_width(ds: &Dataset, n: usize) -> Result<usize, BenchError> {
    if !(2..=32).contains(&n) {
        return Err(BenchError::Usage(format!("linear regression needs 2 <= n <= 32, got {n}")));
    }
    let values = || ds.x.iter().flatten().chain(&ds.y).map(|&v| v as i128);
    let signed = values().any(|v| v < 0);
    let limit = if signed { 1i128 << (n - 1) } else { 1i128 << n };
    if let Some(v) = values().find(|&v| v >= limit || v < -limit) {
        return Err(BenchError::Usage(format!("value {v} does not fit in {n} bits")));
    }
    let max_abs = values().map(i128::abs).max().unwrap_or(0);
    let worst = ds.rows() as i128 * max_abs * max_abs;
    let room = 2 * n as u32 - signed as u32;
    if bits_needed(worst) > room {
        return Err(BenchError::Usage(format!(
            "sums up to {worst} can overflow the {}-bit accumulators; increase n",
            2 * n
        )));
    }
    Ok(if signed { 2 * n } else { n })
}

/// Encrypts the columns of `X` and `y` and computes the upper triangle of
/// `X^T X` and all of `X^T y` under encryption.
pub fn encrypted_aggregates(
    engine: &dyn GateEngine,
    ds: &Dataset,
    n: usize,
    job_limit: usize,
) -> Result<Aggregates, BenchError> {
    let width = operand_width(ds, n)?;
    let d = ds.attributes();
    let encrypt_col = |values: Vec<i64>| -> Result<Vec<EncryptedInt>, BenchError> {
        values
            .into_iter()
            .map(|v| EncryptedInt::encrypt(engine, v, width).map_err(BenchError::from))
            .collect()
    };
    let cols = (0..d)
        .map(|j| encrypt_col(ds.x.iter().map(|r| r[j]).collect()))
        .collect::<Result<Vec<_>, _>>()?;
    let target = encrypt_col(ds.y.clone())?;

    let mut cells = Vec::new();
    let mut groups = Vec::new();
    for i in 0..d {
        for j in i..d {
            cells.push((i, Some(j)));
            groups.push(cols[i].iter().zip(&cols[j]).collect::<Vec<_>>());
        }
    }
    for (i, col) in cols.iter().enumerate() {
        cells.push((i, None));
        groups.push(col.iter().zip(&target).collect());
    }

    let sums: Vec<i128> = if ds.kind == ValueKind::Binary {
        let acc = bits_needed(ds.rows() as i128) as usize;
        linalg::binary_dot_products(engine, &groups, acc, job_limit)?
            .iter()
            .map(|s| s.decrypt_unsigned(engine).map(i128::from))
            .collect::<Result<_, _>>()?
    } else if width == n {
        linalg::dot_products(engine, &groups, job_limit)?
            .iter()
            .map(|s| s.decrypt_unsigned(engine).map(i128::from))
            .collect::<Result<_, _>>()?
    } else {
        linalg::dot_products(engine, &groups, job_limit)?
            .iter()
            .map(|s| s.truncate(width)?.decrypt(engine).map(i128::from))
            .collect::<Result<_, _>>()?
    };

    let mut xtx = vec![vec![0i128; d]; d];
    let mut xty = vec![0i128; d];
    for ((i, j), v) in cells.into_iter().zip(sums) {
        match j {
            Some(j) => {
                xtx[i][j] = v;
                xtx[j][i] = v;
            }
            None => xty[i] = v,
        }
    }
    Ok(Aggregates { xtx, xty })
}

/// Full pipeline; stats cover only the encrypted aggregation.
pub fn run(engine: &dyn GateEngine, ds: &Dataset, n: usize, job_limit: usize) -> Result<LinregOutcome, BenchError> {
    engine.reset_stats();
    let start = Instant::now();
    let encrypted = encrypted_aggregates(engine, ds, n, job_limit)?;
    let seconds = start.elapsed().as_secs_f64();
    let stats = engine.stats();
    let (xtx, xty) = ds.cleartext_aggregates();
    let correct = encrypted.xtx == xtx && encrypted.xty == xty;
    let coefficients = solve_exact(&encrypted.xtx, &encrypted.xty)?;
    Ok(LinregOutcome {
        coefficients,
        encrypted,
        correct,
        seconds,
        stats,
    })
}

/// `p/q` or `p` when integral.
pub fn format_coefficient(c: &BigRational) -> String {
    if c.is_integer() {
        c.to_integer().to_string()
    } else if c.is_negative() {
        format!("-{}/{}", -c.numer(), c.denom())
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use fhe_circuits::{PoolConfig, ReferenceEngine};

    fn reference() -> ReferenceEngine {
        ReferenceEngine::new(PoolConfig::new(1, 4096).unwrap()).unwrap()
    }

    fn ints(v: &[i64]) -> Vec<BigRational> {
        v.iter().map(|&x| BigRational::from_integer(x.into())).collect()
    }

    #[test]
    fn solver_exact_and_fractional() {
        assert_eq!(solve_exact(&[vec![2, 0], vec![0, 4]], &[4, 12]).unwrap(), ints(&[2, 3]));
        let frac = solve_exact(&[vec![0, 2], vec![3, 0]], &[1, 1]).unwrap();
        assert_eq!(frac.iter().map(format_coefficient).collect::<Vec<_>>(), ["1/3", "1/2"]);
        assert!(matches!(
            solve_exact(&[vec![1, 2], vec![2, 4]], &[1, 2]),
            Err(BenchError::Singular { .. })
        ));
        assert_eq!(format_coefficient(&BigRational::new((-3).into(), 4.into())), "-3/4");
    }

    #[test]
    fn recovers_exact_coefficients() {
        let x: Vec<Vec<i64>> = (0..16).map(|t| vec![t % 7 + 1, (t * 5) % 11]).collect();
        let y = x.iter().map(|r| 2 * r[0] + 3 * r[1]).collect();
        let ds = Dataset::new(ValueKind::Numerical, vec![], x, y).unwrap();
        let out = run(&reference(), &ds, 16, 1 << 20).unwrap();
        assert!(out.correct);
        assert_eq!(out.coefficients, ints(&[2, 3]));
    }

    #[test]
    fn signed_values_use_wide_operands() {
        let x: Vec<Vec<i64>> = (0..8).map(|t| vec![t - 4, 3 - 2 * t]).collect();
        let y = x.iter().map(|r| -r[0] + 5 * r[1]).collect();
        let ds = Dataset::new(ValueKind::Numerical, vec![], x, y).unwrap();
        let out = run(&reference(), &ds, 8, 1 << 20).unwrap();
        assert!(out.correct);
        assert_eq!(out.coefficients, ints(&[-1, 5]));
    }

    #[test]
    fn binary_aggregates_match_cleartext() {
        let ds = Dataset::synthetic(40, 4, ValueKind::Binary, 3).unwrap();
        let e = reference();
        let agg = encrypted_aggregates(&e, &ds, 16, 1 << 20).unwrap();
        let (xtx, xty) = ds.cleartext_aggregates();
        assert_eq!((agg.xtx, agg.xty), (xtx, xty));
    }

    #[test]
    fn more_attributes_than_rows_is_singular() {
        let ds = Dataset::new(ValueKind::Numerical, vec![], vec![vec![1, 2, 3], vec![4, 5, 6]], vec![1, 2]).unwrap();
        assert!(matches!(run(&reference(), &ds, 8, 1 << 20), Err(BenchError::Singular { .. })));
    }

    #[test]
    fn rejects_values_that_do_not_fit() {
        let ds = Dataset::new(ValueKind::Numerical, vec![], vec![vec![300]], vec![1]).unwrap();
        assert!(matches!(run(&reference(), &ds, 8, 1 << 20), Err(BenchError::Usage(_))));
        let big = Dataset::synthetic(300, 2, ValueKind::Numerical, 1).unwrap();
        assert!(matches!(run(&reference(), &big, 8, 1 << 20), Err(BenchError::Usage(_))));
    }
}
