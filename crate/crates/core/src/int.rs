//! Encrypted `n`-bit two's-complement integers and the arithmetic circuits
//! over them.
//!
//! Every circuit is written over *lanes*: a slice of independent operand
//! pairs whose gate jobs are coalesced position by position into shared
//! batches. A single operation is the one-lane case, so a vector operation
//! of any length issues the same number of launches as a scalar one.

use crate::engine::{EncBit, GateEngine};
use crate::error::{Error, Result};
use crate::gate::GateKind;
use crate::scheduler::JobBatch;

/// Karatsuba falls back to the schoolbook multiplier below this width.
pub const KARATSUBA_THRESHOLD: usize = 8;

/// Bits least-significant first; all bits come from one engine.
#[derive(Clone, Debug, PartialEq)]
pub struct EncryptedInt {
    bits: Vec<EncBit>,
}

fn check_width(width: usize) -> Result<()> {
    if width == 0 || width > 64 {
        return Err(Error::InvalidWidth(width));
    }
    Ok(())
}

impl EncryptedInt {
    pub fn from_bits(bits: Vec<EncBit>) -> Result<Self> {
        let first = bits.first().ok_or(Error::InvalidWidth(0))?;
        let id = first.engine_id();
        for bit in &bits {
            bit.check_engine(id)?;
        }
        Ok(Self { bits })
    }

    /// Bitwise encryption of `value mod 2^width`.
    pub fn encrypt(engine: &dyn GateEngine, value: i64, width: usize) -> Result<Self> {
        Self::encrypt_unsigned(engine, value as u64, width)
    }

    pub fn encrypt_unsigned(engine: &dyn GateEngine, value: u64, width: usize) -> Result<Self> {
        check_width(width)?;
        let bits = (0..width)
            .map(|i| engine.encrypt_bit(value >> i & 1 == 1))
            .collect();
        Ok(Self { bits })
    }

    /// Noiseless constant.
    pub fn trivial(engine: &dyn GateEngine, value: u64, width: usize) -> Result<Self> {
        check_width(width)?;
        let bits = (0..width)
            .map(|i| engine.trivial_bit(value >> i & 1 == 1))
            .collect();
        Ok(Self { bits })
    }

    pub fn decrypt_unsigned(&self, engine: &dyn GateEngine) -> Result<u64> {
        check_width(self.width())?;
        self.bits.iter().enumerate().try_fold(0u64, |acc, (i, bit)| {
            Ok(acc | (engine.decrypt_bit(bit)? as u64) << i)
        })
    }

    /// Interprets the bits as a signed two's-complement value.
    pub fn decrypt(&self, engine: &dyn GateEngine) -> Result<i64> {
        let raw = self.decrypt_unsigned(engine)?;
        let shift = 64 - self.width() as u32;
        Ok(((raw << shift) as i64) >> shift)
    }

    pub fn width(&self) -> usize {
        self.bits.len()
    }

    pub fn bits(&self) -> &[EncBit] {
        &self.bits
    }

    pub fn into_bits(self) -> Vec<EncBit> {
        self.bits
    }

    /// Pads with trivial zeros up to `width`; never shrinks.
    pub fn zero_extend(&self, engine: &dyn GateEngine, width: usize) -> Result<Self> {
        if width < self.width() {
            return Err(Error::WidthMismatch {
                left: self.width(),
                right: width,
            });
        }
        let zero = engine.trivial_bit(false);
        let mut bits = self.bits.clone();
        bits.resize(width, zero);
        Ok(Self { bits })
    }

    /// Keeps the low `width` bits.
    pub fn truncate(&self, width: usize) -> Result<Self> {
        self.slice(0, width)
    }

    /// Bits `lo..hi`.
    pub fn slice(&self, lo: usize, hi: usize) -> Result<Self> {
        if lo >= hi || hi > self.width() {
            return Err(Error::InvalidWidth(hi.saturating_sub(lo)));
        }
        Ok(Self {
            bits: self.bits[lo..hi].to_vec(),
        })
    }

    /// `low | high << low.width()`.
    pub fn concat(low: &Self, high: &Self) -> Result<Self> {
        let mut bits = low.bits.clone();
        bits.extend(high.bits.iter().cloned());
        Self::from_bits(bits)
    }
}

fn lane_width(lanes: &[(&EncryptedInt, &EncryptedInt)]) -> Result<usize> {
    let (x0, _) = lanes.first().ok_or(Error::EmptyInput)?;
    let width = x0.width();
    for (x, y) in lanes {
        for w in [x.width(), y.width()] {
            if w != width {
                return Err(Error::WidthMismatch { left: width, right: w });
            }
        }
    }
    Ok(width)
}

/// Ripple-carry addition mod `2^n` of every lane, bit-sliced across lanes.
///
/// Per bit position `i`, three launches shared by all lanes:
/// `(s, g) = (a ^ b, a & b)`, `(r, p) = (s ^ c, s & c)`, `c' = g | p`.
/// The carry-in is a trivial 0 and the final carry-out is dropped.
pub fn add_bitwise_lanes(
    engine: &dyn GateEngine,
    lanes: &[(&EncryptedInt, &EncryptedInt)],
) -> Result<Vec<EncryptedInt>> {
    let width = lane_width(lanes)?;
    let count = lanes.len();
    let mut carry = vec![engine.trivial_bit(false); count];
    let mut sums: Vec<Vec<EncBit>> = vec![Vec::with_capacity(width); count];
    for i in 0..width {
        let mut half = JobBatch::with_capacity(2 * count);
        for (a, b) in lanes {
            half.push_compound_bits(GateKind::Xor, GateKind::And, &a.bits[i], &b.bits[i]);
        }
        let half = engine.execute(&half)?;

        let mut full = JobBatch::with_capacity(2 * count);
        for (k, c) in carry.iter().enumerate() {
            full.push_compound_bits(GateKind::Xor, GateKind::And, &half[2 * k], c);
        }
        let full = engine.execute(&full)?;

        let mut merge = JobBatch::with_capacity(count);
        for k in 0..count {
            merge.push_bits(GateKind::Or, &half[2 * k + 1], &full[2 * k + 1]);
        }
        carry = engine.execute(&merge)?;

        for (k, sum) in sums.iter_mut().enumerate() {
            sum.push(full[2 * k].clone());
        }
    }
    Ok(sums.into_iter().map(|bits| EncryptedInt { bits }).collect())
}

/// Number-wise addition of every lane: `n` rounds of
/// `carry = r & b; r = r ^ b; b = carry << 1`, each round one compound
/// launch over all bit positions of all lanes. The schedule never exits
/// early.
pub fn add_numberwise_lanes(
    engine: &dyn GateEngine,
    lanes: &[(&EncryptedInt, &EncryptedInt)],
) -> Result<Vec<EncryptedInt>> {
    let width = lane_width(lanes)?;
    let zero = engine.trivial_bit(false);
    let mut r: Vec<Vec<EncBit>> = lanes.iter().map(|(a, _)| a.bits.clone()).collect();
    let mut b: Vec<Vec<EncBit>> = lanes.iter().map(|(_, b)| b.bits.clone()).collect();
    for _ in 0..width {
        let mut batch = JobBatch::with_capacity(2 * width * lanes.len());
        for (rk, bk) in r.iter().zip(&b) {
            for (rj, bj) in rk.iter().zip(bk) {
                batch.push_compound_bits(GateKind::And, GateKind::Xor, rj, bj);
            }
        }
        let out = engine.execute(&batch)?;
        for (k, lane) in out.chunks_exact(2 * width).enumerate() {
            r[k] = lane.iter().skip(1).step_by(2).cloned().collect();
            let mut shifted = Vec::with_capacity(width);
            shifted.push(zero.clone());
            shifted.extend(lane.iter().step_by(2).take(width - 1).cloned());
            b[k] = shifted;
        }
    }
    Ok(r.into_iter().map(|bits| EncryptedInt { bits }).collect())
}

fn single(mut out: Vec<EncryptedInt>) -> EncryptedInt {
    out.pop().expect("one lane in, one lane out")
}

pub fn add_bitwise(engine: &dyn GateEngine, x: &EncryptedInt, y: &EncryptedInt) -> Result<EncryptedInt> {
    add_bitwise_lanes(engine, &[(x, y)]).map(single)
}

pub fn add_numberwise(
    engine: &dyn GateEngine,
    x: &EncryptedInt,
    y: &EncryptedInt,
) -> Result<EncryptedInt> {
    add_numberwise_lanes(engine, &[(x, y)]).map(single)
}

/// Flips every bit with gate-free NOTs.
pub fn complement(engine: &dyn GateEngine, x: &EncryptedInt) -> Result<EncryptedInt> {
    let bits = x.bits.iter().map(|b| engine.not(b)).collect::<Result<_>>()?;
    Ok(EncryptedInt { bits })
}

/// Two's-complement negation: `complement(x) + 1`.
pub fn negate(engine: &dyn GateEngine, x: &EncryptedInt) -> Result<EncryptedInt> {
    let flipped = complement(engine, x)?;
    let one = EncryptedInt::trivial(engine, 1, x.width())?;
    add_bitwise(engine, &flipped, &one)
}

/// `x << k mod 2^n`; gate-free.
pub fn shift_left(engine: &dyn GateEngine, x: &EncryptedInt, k: usize) -> EncryptedInt {
    let n = x.width();
    let zero = engine.trivial_bit(false);
    let mut bits = vec![zero; k.min(n)];
    bits.extend(x.bits.iter().take(n.saturating_sub(k)).cloned());
    EncryptedInt { bits }
}

/// `x << k` at width `n + k`; gate-free.
pub fn shift_left_widen(engine: &dyn GateEngine, x: &EncryptedInt, k: usize) -> EncryptedInt {
    let mut bits = vec![engine.trivial_bit(false); k];
    bits.extend(x.bits.iter().cloned());
    EncryptedInt { bits }
}

/// Tree accumulation of several groups at once: level `i` of every group is
/// one bit-sliced addition. All inputs must share one width.
pub fn accumulate_tree_groups(
    engine: &dyn GateEngine,
    groups: Vec<Vec<EncryptedInt>>,
) -> Result<Vec<EncryptedInt>> {
    engine.pool().reduce_groups(groups, |pairs| {
        let lanes: Vec<(&EncryptedInt, &EncryptedInt)> = pairs.iter().map(|(a, b)| (a, b)).collect();
        add_bitwise_lanes(engine, &lanes)
    })
}

/// Sum mod `2^n` by pairwise halving in `ceil(log2 k)` levels.
pub fn accumulate_tree(engine: &dyn GateEngine, values: Vec<EncryptedInt>) -> Result<EncryptedInt> {
    accumulate_tree_groups(engine, vec![values]).map(single)
}

/// Shift-and-add multiplication of the unsigned bit patterns of every lane,
/// giving `2n`-bit products. All `lanes * n * n` AND gates form one batch;
/// the `n` partial products of each lane (padded to `2n` bits) are then
/// tree-accumulated with all lanes sharing each level.
pub fn mul_naive_lanes(
    engine: &dyn GateEngine,
    lanes: &[(&EncryptedInt, &EncryptedInt)],
) -> Result<Vec<EncryptedInt>> {
    let n = lane_width(lanes)?;
    let mut batch = JobBatch::with_capacity(lanes.len() * n * n);
    for (x, y) in lanes {
        for yj in &y.bits {
            for xi in &x.bits {
                batch.push_bits(GateKind::And, xi, yj);
            }
        }
    }
    let ands = engine.execute(&batch)?;
    let zero = engine.trivial_bit(false);
    let groups = ands
        .chunks_exact(n * n)
        .map(|lane| {
            lane.chunks_exact(n)
                .enumerate()
                .map(|(j, row)| {
                    let mut bits = vec![zero.clone(); j];
                    bits.extend(row.iter().cloned());
                    bits.resize(2 * n, zero.clone());
                    EncryptedInt { bits }
                })
                .collect()
        })
        .collect();
    accumulate_tree_groups(engine, groups)
}

pub fn mul_naive(engine: &dyn GateEngine, x: &EncryptedInt, y: &EncryptedInt) -> Result<EncryptedInt> {
    mul_naive_lanes(engine, &[(x, y)]).map(single)
}

/// One level of Karatsuba over every lane, giving `2n`-bit products.
///
/// With `h = n/2` and halves zero-extended to `h + 1` bits:
///
/// 1. `<T0, T1> = <X0, Y0> + <X1, Y1>` (one vector addition)
/// 2. `<Z0, Z1, Z2> = <X0, X1, T0> . <Y0, Y1, T1>` (one vector multiplication)
/// 3. `<U0, U1> = <Z2, Z1> + <1, Z0>`, then `M = U0 + !U1 = Z2 - Z1 - Z0`
/// 4. `Z = (Z0 | Z1 << n) + (M << h)`; the first term is a concatenation.
///
/// Widths that are not a power of two, or below [`KARATSUBA_THRESHOLD`],
/// use the schoolbook multiplier.
pub fn mul_karatsuba_lanes(
    engine: &dyn GateEngine,
    lanes: &[(&EncryptedInt, &EncryptedInt)],
) -> Result<Vec<EncryptedInt>> {
    let n = lane_width(lanes)?;
    if !n.is_power_of_two() || n < KARATSUBA_THRESHOLD {
        return mul_naive_lanes(engine, lanes);
    }
    let h = n / 2;
    let halves = |v: &EncryptedInt| -> Result<(EncryptedInt, EncryptedInt)> {
        Ok((
            v.slice(0, h)?.zero_extend(engine, h + 1)?,
            v.slice(h, n)?.zero_extend(engine, h + 1)?,
        ))
    };
    let mut split = Vec::with_capacity(lanes.len());
    for (x, y) in lanes {
        let (x0, x1) = halves(x)?;
        let (y0, y1) = halves(y)?;
        split.push([x0, x1, y0, y1]);
    }

    let sum_lanes: Vec<_> = split
        .iter()
        .flat_map(|[x0, x1, y0, y1]| [(x0, x1), (y0, y1)])
        .collect();
    let sums = add_bitwise_lanes(engine, &sum_lanes)?;

    let mul_lanes: Vec<_> = split
        .iter()
        .zip(sums.chunks_exact(2))
        .flat_map(|([x0, x1, y0, y1], t)| [(x0, y0), (x1, y1), (&t[0], &t[1])])
        .collect();
    let products = mul_naive_lanes(engine, &mul_lanes)?
        .iter()
        .map(|z| z.zero_extend(engine, 2 * n))
        .collect::<Result<Vec<_>>>()?;

    let one = EncryptedInt::trivial(engine, 1, 2 * n)?;
    let fold_lanes: Vec<_> = products
        .chunks_exact(3)
        .flat_map(|z| [(&z[2], &one), (&z[1], &z[0])])
        .collect();
    let folded = add_bitwise_lanes(engine, &fold_lanes)?;
    let flipped = folded
        .chunks_exact(2)
        .map(|u| complement(engine, &u[1]))
        .collect::<Result<Vec<_>>>()?;
    let middle_lanes: Vec<_> = folded.chunks_exact(2).map(|u| &u[0]).zip(&flipped).collect();
    let middles = add_bitwise_lanes(engine, &middle_lanes)?;

    let mut outer = Vec::with_capacity(lanes.len());
    let mut shifted = Vec::with_capacity(lanes.len());
    for (z, m) in products.chunks_exact(3).zip(&middles) {
        outer.push(EncryptedInt::concat(&z[0].truncate(n)?, &z[1].truncate(n)?)?);
        shifted.push(shift_left(engine, m, h));
    }
    let final_lanes: Vec<_> = outer.iter().zip(&shifted).collect();
    add_bitwise_lanes(engine, &final_lanes)
}

pub fn mul_karatsuba(
    engine: &dyn GateEngine,
    x: &EncryptedInt,
    y: &EncryptedInt,
) -> Result<EncryptedInt> {
    mul_karatsuba_lanes(engine, &[(x, y)]).map(single)
}
