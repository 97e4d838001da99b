//! Vectors and matrices of encrypted integers.
//!
//! Vector operations pass all element pairs to the lane-batched integer
//! circuits, so their launch count does not depend on the length.
//! Matrix products come in two schedules:
//!
//! * flat: every `X[i][t] * Y[t][j]` product in one vector multiplication,
//!   then one tree accumulation per output cell, all cells level-synchronous;
//! * Cannon: `q` rounds of an elementwise `q*q` multiply-accumulate on
//!   skewed operands with cyclic row and column rotations in between.
//!
//! Products accumulate at `2n` bits and are truncated to `n` bits at the
//! end, so results are exact modulo `2^n`.

use crate::engine::GateEngine;
use crate::error::{Error, Result};
use crate::gate::GateKind;
use crate::int::{self, EncryptedInt};
use crate::scheduler::JobBatch;

/// Flat matrix multiplication refuses jobs with `r*c*k*n*n` at or above this.
pub const DEFAULT_FLAT_JOB_LIMIT: usize = 1 << 20;

#[derive(Clone, Debug, PartialEq)]
pub struct EncryptedIntVector {
    elems: Vec<EncryptedInt>,
}

impl EncryptedIntVector {
    /// Elements must be non-empty, share one width and one engine.
    pub fn new(elems: Vec<EncryptedInt>) -> Result<Self> {
        let first = elems.first().ok_or(Error::EmptyInput)?;
        let (width, id) = (first.width(), first.bits()[0].engine_id());
        for e in &elems {
            if e.width() != width {
                return Err(Error::WidthMismatch {
                    left: width,
                    right: e.width(),
                });
            }
            if e.bits()[0].engine_id() != id {
                return Err(Error::EngineMismatch {
                    expected: id,
                    found: e.bits()[0].engine_id(),
                });
            }
        }
        Ok(Self { elems })
    }

    pub fn encrypt(engine: &dyn GateEngine, values: &[i64], width: usize) -> Result<Self> {
        let elems = values
            .iter()
            .map(|&v| EncryptedInt::encrypt(engine, v, width))
            .collect::<Result<_>>()?;
        Self::new(elems)
    }

    pub fn decrypt(&self, engine: &dyn GateEngine) -> Result<Vec<i64>> {
        self.elems.iter().map(|e| e.decrypt(engine)).collect()
    }

    pub fn decrypt_unsigned(&self, engine: &dyn GateEngine) -> Result<Vec<u64>> {
        self.elems.iter().map(|e| e.decrypt_unsigned(engine)).collect()
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    pub fn width(&self) -> usize {
        self.elems[0].width()
    }

    pub fn elems(&self) -> &[EncryptedInt] {
        &self.elems
    }

    pub fn into_elems(self) -> Vec<EncryptedInt> {
        self.elems
    }

    fn truncate(&self, width: usize) -> Result<Self> {
        let elems = self.elems.iter().map(|e| e.truncate(width)).collect::<Result<_>>()?;
        Ok(Self { elems })
    }
}

fn pair_lanes<'a>(
    x: &'a EncryptedIntVector,
    y: &'a EncryptedIntVector,
) -> Result<Vec<(&'a EncryptedInt, &'a EncryptedInt)>> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    Ok(x.elems.iter().zip(&y.elems).collect())
}

/// Elementwise sum mod `2^n`: `3n` launches for any length.
pub fn vec_add(
    engine: &dyn GateEngine,
    x: &EncryptedIntVector,
    y: &EncryptedIntVector,
) -> Result<EncryptedIntVector> {
    let elems = int::add_bitwise_lanes(engine, &pair_lanes(x, y)?)?;
    Ok(EncryptedIntVector { elems })
}

/// Elementwise sum with the number-wise adder: `n` launches for any length.
pub fn vec_add_numberwise(
    engine: &dyn GateEngine,
    x: &EncryptedIntVector,
    y: &EncryptedIntVector,
) -> Result<EncryptedIntVector> {
    let elems = int::add_numberwise_lanes(engine, &pair_lanes(x, y)?)?;
    Ok(EncryptedIntVector { elems })
}

/// Elementwise `2n`-bit products of the unsigned bit patterns.
pub fn vec_mul(
    engine: &dyn GateEngine,
    x: &EncryptedIntVector,
    y: &EncryptedIntVector,
) -> Result<EncryptedIntVector> {
    let elems = int::mul_naive_lanes(engine, &pair_lanes(x, y)?)?;
    Ok(EncryptedIntVector { elems })
}

/// [`vec_mul`] through one level of Karatsuba per element.
pub fn vec_mul_karatsuba(
    engine: &dyn GateEngine,
    x: &EncryptedIntVector,
    y: &EncryptedIntVector,
) -> Result<EncryptedIntVector> {
    let elems = int::mul_karatsuba_lanes(engine, &pair_lanes(x, y)?)?;
    Ok(EncryptedIntVector { elems })
}

/// Row-major matrix of encrypted integers.
#[derive(Clone, Debug, PartialEq)]
pub struct EncryptedMatrix {
    rows: usize,
    cols: usize,
    data: EncryptedIntVector,
}

impl EncryptedMatrix {
    pub fn new(rows: usize, cols: usize, data: EncryptedIntVector) -> Result<Self> {
        if rows == 0 || cols == 0 || rows * cols != data.len() {
            return Err(Error::ShapeMismatch(format!(
                "{rows}x{cols} matrix from {} elements",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// `values` in row-major order.
    pub fn encrypt(
        engine: &dyn GateEngine,
        rows: usize,
        cols: usize,
        values: &[i64],
        width: usize,
    ) -> Result<Self> {
        if rows * cols != values.len() {
            return Err(Error::ShapeMismatch(format!(
                "{rows}x{cols} matrix from {} values",
                values.len()
            )));
        }
        Self::new(rows, cols, EncryptedIntVector::encrypt(engine, values, width)?)
    }

    /// Noiseless constant matrix.
    pub fn trivial(
        engine: &dyn GateEngine,
        rows: usize,
        cols: usize,
        values: &[i64],
        width: usize,
    ) -> Result<Self> {
        if rows * cols != values.len() {
            return Err(Error::ShapeMismatch(format!(
                "{rows}x{cols} matrix from {} values",
                values.len()
            )));
        }
        let elems = values
            .iter()
            .map(|&v| EncryptedInt::trivial(engine, v as u64, width))
            .collect::<Result<_>>()?;
        Self::new(rows, cols, EncryptedIntVector::new(elems)?)
    }

    pub fn decrypt(&self, engine: &dyn GateEngine) -> Result<Vec<i64>> {
        self.data.decrypt(engine)
    }

    pub fn decrypt_unsigned(&self, engine: &dyn GateEngine) -> Result<Vec<u64>> {
        self.data.decrypt_unsigned(engine)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn width(&self) -> usize {
        self.data.width()
    }

    pub fn get(&self, i: usize, j: usize) -> &EncryptedInt {
        &self.data.elems[i * self.cols + j]
    }

    pub fn data(&self) -> &EncryptedIntVector {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        let elems = (0..self.cols)
            .flat_map(|j| (0..self.rows).map(move |i| (i, j)))
            .map(|(i, j)| self.get(i, j).clone())
            .collect();
        Self {
            rows: self.cols,
            cols: self.rows,
            data: EncryptedIntVector { elems },
        }
    }
}

fn check_same_width(x: &EncryptedMatrix, y: &EncryptedMatrix) -> Result<()> {
    if x.width() != y.width() {
        return Err(Error::WidthMismatch {
            left: x.width(),
            right: y.width(),
        });
    }
    Ok(())
}

pub fn mat_add(
    engine: &dyn GateEngine,
    x: &EncryptedMatrix,
    y: &EncryptedMatrix,
) -> Result<EncryptedMatrix> {
    if (x.rows, x.cols) != (y.rows, y.cols) {
        return Err(Error::ShapeMismatch(format!(
            "{}x{} + {}x{}",
            x.rows, x.cols, y.rows, y.cols
        )));
    }
    check_same_width(x, y)?;
    EncryptedMatrix::new(x.rows, x.cols, vec_add(engine, &x.data, &y.data)?)
}

/// Flat product with the default job guard.
pub fn mat_mul_flat(
    engine: &dyn GateEngine,
    x: &EncryptedMatrix,
    y: &EncryptedMatrix,
) -> Result<EncryptedMatrix> {
    mat_mul_flat_with_limit(engine, x, y, DEFAULT_FLAT_JOB_LIMIT)
}

/// `X (r x k) * Y (k x c)` mod `2^n`. All `r*c*k` products go through one
/// vector multiplication; the `k` products of each cell are then summed by
/// tree accumulation with every cell sharing each level. Refuses inputs
/// whose AND-gate count `r*c*k*n*n` reaches `limit`.
pub fn mat_mul_flat_with_limit(
    engine: &dyn GateEngine,
    x: &EncryptedMatrix,
    y: &EncryptedMatrix,
    limit: usize,
) -> Result<EncryptedMatrix> {
    if x.cols != y.rows {
        return Err(Error::ShapeMismatch(format!(
            "{}x{} * {}x{}",
            x.rows, x.cols, y.rows, y.cols
        )));
    }
    check_same_width(x, y)?;
    let (r, k, c, n) = (x.rows, x.cols, y.cols, x.width());
    let jobs = r
        .saturating_mul(c)
        .saturating_mul(k)
        .saturating_mul(n)
        .saturating_mul(n);
    if jobs >= limit {
        return Err(Error::FlatGuard { jobs, limit });
    }
    let mut lanes = Vec::with_capacity(r * c * k);
    for i in 0..r {
        for j in 0..c {
            for t in 0..k {
                lanes.push((x.get(i, t), y.get(t, j)));
            }
        }
    }
    let products = int::mul_naive_lanes(engine, &lanes)?;
    let groups = products.chunks_exact(k).map(<[_]>::to_vec).collect();
    let sums = int::accumulate_tree_groups(engine, groups)?;
    let data = EncryptedIntVector { elems: sums }.truncate(n)?;
    EncryptedMatrix::new(r, c, data)
}

/// Round and rotation counts of one Cannon product.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CannonTrace {
    pub multiply_rounds: usize,
    pub rotations: usize,
}

pub fn mat_mul_cannon(
    engine: &dyn GateEngine,
    x: &EncryptedMatrix,
    y: &EncryptedMatrix,
) -> Result<EncryptedMatrix> {
    mat_mul_cannon_traced(engine, x, y).map(|(m, _)| m)
}

/// Cannon's algorithm on square `q x q` operands. After the initial skew
/// `A[i][j] = X[i][(i+j) mod q]`, `B[i][j] = Y[(i+j) mod q][j]`, each of the
/// `q` rounds multiplies `A` and `B` elementwise and adds into the
/// accumulator; between rounds `A` rotates its rows left by one and `B` its
/// columns up by one. Rotations only re-index ciphertexts.
pub fn mat_mul_cannon_traced(
    engine: &dyn GateEngine,
    x: &EncryptedMatrix,
    y: &EncryptedMatrix,
) -> Result<(EncryptedMatrix, CannonTrace)> {
    let q = x.rows;
    if x.cols != q || y.rows != q || y.cols != q {
        return Err(Error::ShapeMismatch(format!(
            "Cannon needs equal square operands, got {}x{} * {}x{}",
            x.rows, x.cols, y.rows, y.cols
        )));
    }
    check_same_width(x, y)?;
    let n = x.width();
    let mut a: Vec<EncryptedInt> = (0..q * q)
        .map(|idx| {
            let (i, j) = (idx / q, idx % q);
            x.get(i, (i + j) % q).clone()
        })
        .collect();
    let mut b: Vec<EncryptedInt> = (0..q * q)
        .map(|idx| {
            let (i, j) = (idx / q, idx % q);
            y.get((i + j) % q, j).clone()
        })
        .collect();

    let mut trace = CannonTrace::default();
    let mut acc: Option<Vec<EncryptedInt>> = None;
    for round in 0..q {
        let lanes: Vec<_> = a.iter().zip(&b).collect();
        let products = int::mul_naive_lanes(engine, &lanes)?;
        trace.multiply_rounds += 1;
        acc = Some(match acc {
            None => products,
            Some(sum) => {
                let lanes: Vec<_> = sum.iter().zip(&products).collect();
                int::add_bitwise_lanes(engine, &lanes)?
            }
        });
        if round + 1 < q {
            a = (0..q * q)
                .map(|idx| a[(idx / q) * q + (idx % q + 1) % q].clone())
                .collect();
            b = (0..q * q)
                .map(|idx| b[((idx / q + 1) % q) * q + idx % q].clone())
                .collect();
            trace.rotations += 1;
        }
    }
    let sums = acc.expect("q >= 1 rounds");
    let data = EncryptedIntVector { elems: sums }.truncate(n)?;
    Ok((EncryptedMatrix::new(q, q, data)?, trace))
}

fn chunk_by_jobs<T>(groups: &[Vec<T>], jobs_per_item: usize, limit: usize) -> Result<Vec<&[Vec<T>]>> {
    let mut chunks = Vec::new();
    let mut start = 0;
    let mut jobs = 0usize;
    for (idx, group) in groups.iter().enumerate() {
        if group.is_empty() {
            return Err(Error::EmptyInput);
        }
        let cost = group.len() * jobs_per_item;
        if cost >= limit {
            return Err(Error::FlatGuard { jobs: cost, limit });
        }
        if jobs + cost >= limit {
            chunks.push(&groups[start..idx]);
            start = idx;
            jobs = 0;
        }
        jobs += cost;
    }
    chunks.push(&groups[start..]);
    Ok(chunks)
}

/// Sums `sum_t x_t * y_t` for each group of pairs, exact at `2n` bits.
/// Groups are processed in chunks whose AND-gate count stays below
/// `limit`; within a chunk all products share one vector multiplication
/// and all sums share each accumulation level.
pub fn dot_products(
    engine: &dyn GateEngine,
    groups: &[Vec<(&EncryptedInt, &EncryptedInt)>],
    limit: usize,
) -> Result<Vec<EncryptedInt>> {
    let first = groups.first().and_then(|g| g.first()).ok_or(Error::EmptyInput)?;
    let n = first.0.width();
    let mut out = Vec::with_capacity(groups.len());
    for chunk in chunk_by_jobs(groups, n * n, limit)? {
        let lanes: Vec<_> = chunk.iter().flatten().copied().collect();
        let mut products = int::mul_naive_lanes(engine, &lanes)?.into_iter();
        let grouped = chunk
            .iter()
            .map(|g| products.by_ref().take(g.len()).collect())
            .collect();
        out.extend(int::accumulate_tree_groups(engine, grouped)?);
    }
    Ok(out)
}

/// Dot products of 0/1 values: ANDs the least-significant bits and counts
/// the ones at `acc_width` bits, which must hold the longest group length.
pub fn binary_dot_products(
    engine: &dyn GateEngine,
    groups: &[Vec<(&EncryptedInt, &EncryptedInt)>],
    acc_width: usize,
    limit: usize,
) -> Result<Vec<EncryptedInt>> {
    let zero = engine.trivial_bit(false);
    let mut out = Vec::with_capacity(groups.len());
    for chunk in chunk_by_jobs(groups, 1, limit)? {
        let mut batch = JobBatch::new();
        for (x, y) in chunk.iter().flatten() {
            batch.push_bits(GateKind::And, &x.bits()[0], &y.bits()[0]);
        }
        let mut ands = engine.execute(&batch)?.into_iter();
        let grouped = chunk
            .iter()
            .map(|g| {
                ands.by_ref()
                    .take(g.len())
                    .map(|bit| {
                        let mut bits = vec![bit];
                        bits.resize(acc_width, zero.clone());
                        EncryptedInt::from_bits(bits)
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        out.extend(int::accumulate_tree_groups(engine, grouped)?);
    }
    Ok(out)
}
