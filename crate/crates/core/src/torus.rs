//! Fixed-point arithmetic on the real torus `R/Z`.
//!
//! A torus element is stored as a `w`-bit unsigned word `t` representing the
//! fraction `t / 2^w`. Wrapping integer arithmetic on the word is exactly
//! addition modulo 1, so every operation here is bit-exact.

use std::fmt;
use std::hash::Hash;
use std::ops::{Add, AddAssign, Neg, Sub, SubAssign};

/// Unsigned word backing a torus element.
pub trait TorusWord:
    Copy + Eq + Ord + Hash + Default + fmt::Debug + Send + Sync + 'static
{
    const BITS: u32;
    fn wrapping_add(self, other: Self) -> Self;
    fn wrapping_sub(self, other: Self) -> Self;
    fn wrapping_neg(self) -> Self;
    fn wrapping_mul(self, other: Self) -> Self;
    /// Truncates to the low `BITS` bits.
    fn from_u64(v: u64) -> Self;
    fn to_u64(self) -> u64;
}

macro_rules! impl_torus_word {
    ($($t:ty),*) => {$(
        impl TorusWord for $t {
            const BITS: u32 = <$t>::BITS;
            #[inline]
            fn wrapping_add(self, other: Self) -> Self { <$t>::wrapping_add(self, other) }
            #[inline]
            fn wrapping_sub(self, other: Self) -> Self { <$t>::wrapping_sub(self, other) }
            #[inline]
            fn wrapping_neg(self) -> Self { <$t>::wrapping_neg(self) }
            #[inline]
            fn wrapping_mul(self, other: Self) -> Self { <$t>::wrapping_mul(self, other) }
            #[inline]
            fn from_u64(v: u64) -> Self { v as $t }
            #[inline]
            fn to_u64(self) -> u64 { self as u64 }
        }
    )*};
}

impl_torus_word!(u8, u16, u32, u64);

#[derive(Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct Torus<W: TorusWord>(W);

/// The precision used by LWE samples.
pub type Torus32 = Torus<u32>;

impl<W: TorusWord> Torus<W> {
    pub const PRECISION: u32 = W::BITS;

    pub fn zero() -> Self {
        Self(W::default())
    }

    pub fn from_raw(raw: W) -> Self {
        Self(raw)
    }

    pub fn raw(self) -> W {
        self.0
    }

    /// Nearest representable element to `x mod 1`.
    pub fn from_f64(x: f64) -> Self {
        let frac = x - x.floor();
        let scaled = (frac * 2f64.powi(W::BITS as i32)).round();
        // 2^w itself wraps to zero; u128 keeps the w = 64 case exact.
        let raw = (scaled as u128) & ((1u128 << W::BITS) - 1);
        Self(W::from_u64(raw as u64))
    }

    /// Value in `[0, 1)`.
    pub fn to_f64(self) -> f64 {
        self.0.to_u64() as f64 / 2f64.powi(W::BITS as i32)
    }

    /// Centered representative in `[-1/2, 1/2)`.
    pub fn to_signed_f64(self) -> f64 {
        let v = self.to_f64();
        if v >= 0.5 {
            v - 1.0
        } else {
            v
        }
    }

    /// `k * self mod 1`, i.e. `self` added to itself `k` times.
    pub fn mul_int(self, k: i64) -> Self {
        Self(self.0.wrapping_mul(W::from_u64(k as u64)))
    }
}

impl<W: TorusWord> Add for Torus<W> {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        Self(self.0.wrapping_add(rhs.0))
    }
}

impl<W: TorusWord> AddAssign for Torus<W> {
    #[inline]
    fn add_assign(&mut self, rhs: Self) {
        self.0 = self.0.wrapping_add(rhs.0);
    }
}

impl<W: TorusWord> Sub for Torus<W> {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        Self(self.0.wrapping_sub(rhs.0))
    }
}

impl<W: TorusWord> SubAssign for Torus<W> {
    #[inline]
    fn sub_assign(&mut self, rhs: Self) {
        self.0 = self.0.wrapping_sub(rhs.0);
    }
}

impl<W: TorusWord> Neg for Torus<W> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self(self.0.wrapping_neg())
    }
}

impl<W: TorusWord> fmt::Debug for Torus<W> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Torus({:?} / 2^{})", self.0, W::BITS)
    }
}

/// `(x + y) mod 1`.
pub fn torus_add<W: TorusWord>(x: Torus<W>, y: Torus<W>) -> Torus<W> {
    x + y
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn dyadic_addition() {
        let q = Torus32::from_f64(0.25);
        assert_eq!(torus_add(q, q), Torus32::from_f64(0.5));
        assert_eq!(
            torus_add(Torus32::from_f64(0.75), Torus32::from_f64(0.5)),
            Torus32::from_f64(0.25)
        );
    }

    #[test]
    fn zero_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let x = Torus32::from_raw(rng.random());
            assert_eq!(torus_add(x, Torus32::zero()), x);
        }
    }

    #[test]
    fn from_f64_wraps_and_rounds() {
        assert_eq!(Torus32::from_f64(1.0), Torus32::zero());
        assert_eq!(Torus32::from_f64(-0.125), Torus32::from_f64(0.875));
        assert_eq!(Torus::<u8>::from_f64(0.5).raw(), 128);
        assert_eq!(Torus::<u64>::from_f64(0.5).raw(), 1u64 << 63);
        assert_eq!(Torus32::from_f64(0.75).to_signed_f64(), -0.25);
    }

    #[test]
    fn exhaustive_w8_group_laws() {
        let all: Vec<Torus<u8>> = (0..=255u8).map(Torus::from_raw).collect();
        for &x in &all {
            assert_eq!(x + (-x), Torus::zero());
            for &y in &all {
                assert_eq!(x + y, y + x);
                // associativity against a third element drawn from a stride
                for z in all.iter().step_by(17) {
                    assert_eq!((x + y) + *z, x + (y + *z));
                }
            }
        }
    }

    #[test]
    fn exhaustive_w8_scalar_is_repeated_addition() {
        for raw in 0..=255u8 {
            let t = Torus::<u8>::from_raw(raw);
            let mut acc = Torus::zero();
            for k in 0..20i64 {
                assert_eq!(t.mul_int(k), acc);
                assert_eq!(t.mul_int(-k), -acc);
                acc += t;
            }
        }
    }

    proptest! {
        #[test]
        fn w32_associative_commutative(a: u32, b: u32, c: u32) {
            let (x, y, z) = (Torus32::from_raw(a), Torus32::from_raw(b), Torus32::from_raw(c));
            prop_assert_eq!(x + y, y + x);
            prop_assert_eq!((x + y) + z, x + (y + z));
            prop_assert_eq!((x - y) + y, x);
        }

        #[test]
        fn w32_scalar_matches_repeated_addition(a: u32, k in -64i64..64) {
            let t = Torus32::from_raw(a);
            let mut acc = Torus32::zero();
            for _ in 0..k.unsigned_abs() {
                acc += t;
            }
            let expected = if k < 0 { -acc } else { acc };
            prop_assert_eq!(t.mul_int(k), expected);
        }
    }
}
