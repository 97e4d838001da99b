//! LWE samples over the torus: key generation, encryption of single bits,
//! phase computation, decryption, and integer-linear combinations.
//!
//! A bit `v` is encoded as `+mu` (v = 1) or `-mu` (v = 0). A sample is a
//! pair `(a, b)` with `b = <a, s> + encode(v) + e`. Every sample carries a
//! worst-case bound on `|e|` in torus units; decryption refuses samples
//! whose bound reaches `mu / 2`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::torus::Torus32;

const TWO_POW_32: f64 = 4_294_967_296.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LweParams {
    /// Secret-key length `m`.
    pub dimension: usize,
    /// Standard deviation of the fresh noise, in torus units.
    pub alpha: f64,
    /// Encoding of bit 1; bit 0 encodes as `-mu`.
    pub mu: Torus32,
}

impl Default for LweParams {
    /// `m = 500`, `alpha = 2^-15`, `mu = 1/8`. Not security-audited.
    fn default() -> Self {
        Self {
            dimension: 500,
            alpha: 2f64.powi(-15),
            mu: Torus32::from_f64(0.125),
        }
    }
}

impl LweParams {
    pub fn new(dimension: usize, alpha: f64, mu: Torus32) -> Result<Self> {
        let params = Self {
            dimension,
            alpha,
            mu,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimension == 0 {
            return Err(Error::InvalidParams("dimension must be at least 1".into()));
        }
        let mu = self.mu.to_f64();
        if mu <= 0.0 || mu > 0.25 {
            return Err(Error::InvalidParams(format!(
                "mu must lie in (0, 1/4], got {mu}"
            )));
        }
        if !self.alpha.is_finite() || self.alpha < 0.0 || self.alpha >= mu / 4.0 {
            return Err(Error::InvalidParams(format!(
                "alpha must lie in [0, mu/4), got {}",
                self.alpha
            )));
        }
        Ok(())
    }

    pub fn precision_bits(&self) -> u32 {
        Torus32::PRECISION
    }

    pub fn encode(&self, bit: bool) -> Torus32 {
        if bit {
            self.mu
        } else {
            -self.mu
        }
    }

    fn fresh_bound_raw(&self) -> u32 {
        self.mu.raw() / 8
    }

    /// Clamp bound on fresh noise, `mu / 8`; also the noise bound of every
    /// bootstrapped gate output.
    pub fn fresh_noise_bound(&self) -> f64 {
        self.fresh_bound_raw() as f64 / TWO_POW_32
    }

    /// Samples with `noise_bound >= mu / 2` are never decrypted.
    pub fn decryption_limit(&self) -> f64 {
        self.mu.to_f64() / 2.0
    }

    /// Distance from every noiseless gate phase (`±mu`, `±2mu`, `±3mu`) to
    /// the decision boundaries `{0, 1/2}` when `mu = 1/8`.
    pub fn decision_margin(&self) -> f64 {
        let mu = self.mu.to_f64();
        mu.min(0.5 - mu)
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct SecretKey {
    dimension: usize,
    bits: Vec<u8>,
}

impl std::fmt::Debug for SecretKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SecretKey")
            .field("dimension", &self.dimension)
            .finish_non_exhaustive()
    }
}

impl SecretKey {
    pub fn from_bits(bits: Vec<u8>) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::InvalidParams("secret key must be non-empty".into()));
        }
        if let Some(bad) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::InvalidParams(format!(
                "secret key entries must be 0 or 1, found {bad}"
            )));
        }
        Ok(Self {
            dimension: bits.len(),
            bits,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    /// `<a, s> mod 1`.
    pub fn dot(&self, a: &[Torus32]) -> Torus32 {
        let raw = a
            .iter()
            .zip(&self.bits)
            .fold(0u32, |acc, (ai, &si)| {
                acc.wrapping_add(ai.raw() & 0u32.wrapping_sub(si as u32))
            });
        Torus32::from_raw(raw)
    }
}

/// Draws `m` uniform key bits from a generator seeded with `seed`.
pub fn keygen(params: &LweParams, seed: u64) -> SecretKey {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bits = (0..params.dimension)
        .map(|_| rng.random_range(0..=1u8))
        .collect();
    SecretKey {
        dimension: params.dimension,
        bits,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LweSample {
    a: Vec<Torus32>,
    b: Torus32,
    noise_bound: f64,
}

impl LweSample {
    pub fn new(a: Vec<Torus32>, b: Torus32, noise_bound: f64) -> Self {
        Self { a, b, noise_bound }
    }

    /// Noiseless sample with a zero mask: its phase is `b` under any key.
    pub fn trivial(dimension: usize, b: Torus32) -> Self {
        Self {
            a: vec![Torus32::zero(); dimension],
            b,
            noise_bound: 0.0,
        }
    }

    pub fn a(&self) -> &[Torus32] {
        &self.a
    }

    pub fn b(&self) -> Torus32 {
        self.b
    }

    pub fn noise_bound(&self) -> f64 {
        self.noise_bound
    }

    pub fn dimension(&self) -> usize {
        self.a.len()
    }

    /// `(-a, -b)`: flips the encoded bit without touching the noise bound.
    pub fn negate(&self) -> Self {
        Self {
            a: self.a.iter().map(|&x| -x).collect(),
            b: -self.b,
            noise_bound: self.noise_bound,
        }
    }
}

fn sample_noise<R: Rng + ?Sized>(params: &LweParams, rng: &mut R) -> Torus32 {
    if params.alpha == 0.0 {
        return Torus32::zero();
    }
    let bound = params.fresh_bound_raw() as f64;
    let z: f64 = rng.sample(StandardNormal);
    let e = (z * params.alpha * TWO_POW_32).round().clamp(-bound, bound) as i64;
    Torus32::from_raw(e as u32)
}

pub fn encrypt_bit<R: Rng + ?Sized>(
    key: &SecretKey,
    bit: bool,
    params: &LweParams,
    rng: &mut R,
) -> Result<LweSample> {
    check_dimension(params.dimension, key.dimension())?;
    let a: Vec<Torus32> = (0..params.dimension)
        .map(|_| Torus32::from_raw(rng.random()))
        .collect();
    let b = key.dot(&a) + params.encode(bit) + sample_noise(params, rng);
    Ok(LweSample {
        a,
        b,
        noise_bound: params.fresh_noise_bound(),
    })
}

/// `b - <a, s> mod 1`.
pub fn phase(key: &SecretKey, c: &LweSample) -> Result<Torus32> {
    check_dimension(key.dimension(), c.dimension())?;
    Ok(c.b - key.dot(&c.a))
}

/// 1 iff the phase lies strictly inside `(0, 1/2)`.
pub fn decode_phase(phase: Torus32) -> bool {
    let raw = phase.raw();
    raw != 0 && raw < 1 << 31
}

pub fn decrypt_bit(key: &SecretKey, c: &LweSample, params: &LweParams) -> Result<bool> {
    let limit = params.decryption_limit();
    if c.noise_bound >= limit {
        return Err(Error::DecryptionUnreliable {
            noise_bound: c.noise_bound,
            limit,
        });
    }
    Ok(decode_phase(phase(key, c)?))
}

/// `sum_i coeffs[i] * samples[i] + (0, offset)`, with the noise bound
/// `sum_i |coeffs[i]| * bound_i`.
pub fn lwe_linear(samples: &[&LweSample], coeffs: &[i64], offset: Torus32) -> Result<LweSample> {
    if samples.len() != coeffs.len() {
        return Err(Error::LengthMismatch {
            left: samples.len(),
            right: coeffs.len(),
        });
    }
    let first = samples.first().ok_or(Error::EmptyInput)?;
    let m = first.dimension();
    let mut a = vec![Torus32::zero(); m];
    let mut b = offset;
    let mut noise_bound = 0.0;
    for (sample, &k) in samples.iter().zip(coeffs) {
        check_dimension(m, sample.dimension())?;
        for (acc, &x) in a.iter_mut().zip(&sample.a) {
            *acc += x.mul_int(k);
        }
        b += sample.b.mul_int(k);
        noise_bound += k.unsigned_abs() as f64 * sample.noise_bound;
    }
    Ok(LweSample { a, b, noise_bound })
}

fn check_dimension(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn noiseless(m: usize) -> LweParams {
        LweParams {
            dimension: m,
            alpha: 0.0,
            ..LweParams::default()
        }
    }

    #[test]
    fn params_validation() {
        assert!(LweParams::default().validate().is_ok());
        assert!(LweParams::new(0, 0.0, Torus32::from_f64(0.125)).is_err());
        assert!(LweParams::new(4, 0.125 / 4.0, Torus32::from_f64(0.125)).is_err());
        assert!(LweParams::new(4, 0.0, Torus32::zero()).is_err());
        assert!(LweParams::new(4, 0.0, Torus32::from_f64(0.125)).is_ok());
    }

    #[test]
    fn keygen_is_deterministic() {
        let params = LweParams::default();
        assert_eq!(keygen(&params, 7), keygen(&params, 7));
        assert_ne!(keygen(&params, 7).bits(), keygen(&params, 8).bits());
        let small = noiseless(4);
        assert_eq!(keygen(&small, 123).dimension(), 4);
        assert!(keygen(&params, 7).bits().iter().all(|&b| b <= 1));
    }

    #[test]
    fn secret_key_rejects_non_binary() {
        assert!(SecretKey::from_bits(vec![0, 1, 2]).is_err());
        assert!(SecretKey::from_bits(vec![]).is_err());
        assert_eq!(SecretKey::from_bits(vec![0, 1, 1]).unwrap().dimension(), 3);
    }

    #[test]
    fn roundtrip_fresh_samples() {
        let params = LweParams::default();
        let key = keygen(&params, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for bit in [false, true] {
            for _ in 0..1000 {
                let c = encrypt_bit(&key, bit, &params, &mut rng).unwrap();
                assert_eq!(decrypt_bit(&key, &c, &params).unwrap(), bit);
            }
        }
    }

    #[test]
    fn zero_noise_phase_is_encoding() {
        let params = noiseless(500);
        let key = keygen(&params, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let c0 = encrypt_bit(&key, false, &params, &mut rng).unwrap();
        let c1 = encrypt_bit(&key, true, &params, &mut rng).unwrap();
        assert_eq!(phase(&key, &c0).unwrap(), -params.mu);
        assert_eq!(phase(&key, &c1).unwrap(), params.mu);
    }

    #[test]
    fn body_matches_hand_dot_product() {
        // Recompute <a, s> with a plain u64 accumulator reduced mod 2^32.
        let params = noiseless(8);
        let key = keygen(&params, 42);
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let c = encrypt_bit(&key, false, &params, &mut rng).unwrap();
        let mut dot: u64 = 0;
        for (a, &s) in c.a().iter().zip(key.bits()) {
            dot += a.raw() as u64 * s as u64;
        }
        let expected = (dot % (1u64 << 32)) as u32;
        assert_eq!(c.b(), Torus32::from_raw(expected) - params.mu);
    }

    #[test]
    fn injected_noise_shows_in_phase() {
        let params = noiseless(16);
        let key = keygen(&params, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let c = encrypt_bit(&key, true, &params, &mut rng).unwrap();
        let e = Torus32::from_raw(params.mu.raw() / 4);
        let noisy = LweSample::new(c.a().to_vec(), c.b() + e, e.to_f64());
        assert_eq!(phase(&key, &noisy).unwrap(), params.mu + e);
        assert!(noisy.noise_bound() >= e.to_f64());
    }

    #[test]
    fn decrypt_interval_and_contract() {
        let params = noiseless(4);
        let key = SecretKey::from_bits(vec![1, 0, 1, 1]).unwrap();
        // phase 0.3 with zero mask -> inside (0, 1/2) -> 1
        let c = LweSample::trivial(4, Torus32::from_f64(0.3));
        assert!(decrypt_bit(&key, &c, &params).unwrap());
        let c = LweSample::trivial(4, Torus32::from_f64(0.7));
        assert!(!decrypt_bit(&key, &c, &params).unwrap());
        // ties decode to 0
        assert!(!decode_phase(Torus32::zero()));
        assert!(!decode_phase(Torus32::from_f64(0.5)));
        let over = LweSample::new(vec![Torus32::zero(); 4], params.mu, params.mu.to_f64());
        assert!(matches!(
            decrypt_bit(&key, &over, &params),
            Err(Error::DecryptionUnreliable { .. })
        ));
    }

    #[test]
    fn phase_rejects_dimension_mismatch() {
        let key = SecretKey::from_bits(vec![1, 0, 1]).unwrap();
        let c = LweSample::trivial(4, Torus32::zero());
        assert_eq!(
            phase(&key, &c),
            Err(Error::DimensionMismatch {
                expected: 3,
                found: 4
            })
        );
    }

    #[test]
    fn linear_combinations() {
        let params = noiseless(32);
        let key = keygen(&params, 9);
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let c = encrypt_bit(&key, true, &params, &mut rng).unwrap();
        let d = encrypt_bit(&key, true, &params, &mut rng).unwrap();

        let same = lwe_linear(&[&c], &[1], Torus32::zero()).unwrap();
        assert_eq!(same, c);

        let sum = lwe_linear(&[&c, &d], &[1, 1], Torus32::zero()).unwrap();
        assert_eq!(phase(&key, &sum).unwrap(), params.mu.mul_int(2));

        let noisy = LweSample::new(c.a().to_vec(), c.b(), 0.01);
        let cancel = lwe_linear(&[&noisy, &noisy], &[1, -1], Torus32::zero()).unwrap();
        assert_eq!(phase(&key, &cancel).unwrap(), Torus32::zero());
        assert_eq!(cancel.noise_bound(), 0.02);

        let short = LweSample::trivial(3, Torus32::zero());
        assert!(matches!(
            lwe_linear(&[&c, &short], &[1, 1], Torus32::zero()),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(lwe_linear(&[&c], &[1, 2], Torus32::zero()).is_err());
    }

    #[test]
    fn noise_bound_is_sound_for_fresh_samples() {
        let params = LweParams {
            alpha: 2f64.powi(-8),
            ..LweParams::default()
        };
        let key = keygen(&params, 11);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for bit in [false, true] {
            for _ in 0..200 {
                let c = encrypt_bit(&key, bit, &params, &mut rng).unwrap();
                let e = (phase(&key, &c).unwrap() - params.encode(bit)).to_signed_f64();
                assert!(e.abs() <= c.noise_bound());
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn phase_is_linear(
            seed: u64,
            bits in proptest::collection::vec(any::<bool>(), 1..6),
            coeff_seed in proptest::collection::vec(-5i64..=5, 6),
            offset: u32,
        ) {
            let params = LweParams { dimension: 24, ..LweParams::default() };
            let key = keygen(&params, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
            let samples: Vec<LweSample> = bits
                .iter()
                .map(|&b| encrypt_bit(&key, b, &params, &mut rng).unwrap())
                .collect();
            let refs: Vec<&LweSample> = samples.iter().collect();
            let coeffs = &coeff_seed[..samples.len()];
            let offset = Torus32::from_raw(offset);
            let combined = lwe_linear(&refs, coeffs, offset).unwrap();
            let mut expected = offset;
            for (s, &k) in samples.iter().zip(coeffs) {
                expected += phase(&key, s).unwrap().mul_int(k);
            }
            prop_assert_eq!(phase(&key, &combined).unwrap(), expected);
        }

        #[test]
        fn tracked_bound_covers_injected_noise(raw_e in -(1i64 << 24)..(1i64 << 24), k in -4i64..=4) {
            let params = LweParams { dimension: 8, alpha: 0.0, ..LweParams::default() };
            let key = keygen(&params, 1);
            let mut rng = ChaCha8Rng::seed_from_u64(2);
            let c = encrypt_bit(&key, true, &params, &mut rng).unwrap();
            let e = Torus32::from_raw(raw_e as u32);
            let bound = (raw_e.unsigned_abs() as f64) / TWO_POW_32;
            let noisy = LweSample::new(c.a().to_vec(), c.b() + e, bound);
            let combined = lwe_linear(&[&noisy], &[k], Torus32::zero()).unwrap();
            let actual = (phase(&key, &combined).unwrap() - params.mu.mul_int(k)).to_signed_f64();
            prop_assert!(actual.abs() <= combined.noise_bound() + f64::EPSILON);
        }
    }
}
