//! Cross-engine behavior: the LWE engine must compute exactly what the
//! cleartext engine computes, under every worker count and batch cap.

use fhe_circuits::engine::{GateEngine, OracleBootstrapEngine, ReferenceEngine};
use fhe_circuits::int::{self, EncryptedInt};
use fhe_circuits::linalg::{self, EncryptedMatrix};
use fhe_circuits::lwe::{keygen, LweParams};
use fhe_circuits::scheduler::{JobBatch, PoolConfig};
use fhe_circuits::{Error, GateKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn oracle(seed: u64, workers: usize, max_batch: usize) -> OracleBootstrapEngine {
    let params = LweParams::default();
    OracleBootstrapEngine::new(
        keygen(&params, 11),
        params,
        seed,
        PoolConfig::new(workers, max_batch).unwrap(),
    )
    .unwrap()
}

fn reference(workers: usize) -> ReferenceEngine {
    ReferenceEngine::new(PoolConfig::new(workers, 4096).unwrap()).unwrap()
}

/// Random layered circuit over 8 input bits; every layer is one batch of
/// gates (some compound) on earlier wires, with occasional NOTs.
fn random_circuit(engine: &dyn GateEngine, inputs: &[bool], seed: u64) -> Vec<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut wires: Vec<_> = inputs.iter().map(|&b| engine.encrypt_bit(b)).collect();
    for _ in 0..6 {
        let picks: Vec<(GateKind, GateKind, usize, usize, bool)> = (0..8)
            .map(|_| {
                (
                    GateKind::ALL[rng.random_range(0..8)],
                    GateKind::ALL[rng.random_range(0..8)],
                    rng.random_range(0..wires.len()),
                    rng.random_range(0..wires.len()),
                    rng.random_bool(0.3),
                )
            })
            .collect();
        let mut batch = JobBatch::new();
        for &(a, b, x, y, compound) in &picks {
            if compound {
                batch.push_compound_bits(a, b, &wires[x], &wires[y]);
            } else {
                batch.push_bits(a, &wires[x], &wires[y]);
            }
        }
        let mut out = engine.execute(&batch).unwrap();
        if rng.random_bool(0.5) {
            let k = rng.random_range(0..out.len());
            out[k] = engine.not(&out[k]).unwrap();
        }
        wires.extend(out);
    }
    wires.iter().map(|w| engine.decrypt_bit(w).unwrap()).collect()
}

#[test]
fn oracle_matches_reference_on_random_circuits() {
    let lwe = oracle(1, 1, 4096);
    let clear = reference(1);
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for circuit in 0..40 {
        let inputs: Vec<bool> = (0..8).map(|_| rng.random()).collect();
        assert_eq!(
            random_circuit(&lwe, &inputs, circuit),
            random_circuit(&clear, &inputs, circuit),
            "circuit {circuit}"
        );
    }
    assert_eq!(lwe.stats(), clear.stats());
}

#[test]
fn outputs_carry_fresh_noise_bounds() {
    let e = oracle(2, 1, 4096);
    let x = EncryptedInt::encrypt(&e, 1234, 16).unwrap();
    let y = EncryptedInt::encrypt(&e, -77, 16).unwrap();
    let p = int::mul_naive(&e, &x, &y).unwrap();
    let bound = e.fresh_noise_bound();
    assert!(p.bits().iter().all(|b| b.noise_bound() <= bound));
    assert_eq!(p.truncate(16).unwrap().decrypt(&e).unwrap(), (1234i64 * -77) as i16 as i64);
}

#[test]
fn ciphertexts_do_not_depend_on_workers_or_batch_cap() {
    let run = |workers: usize, max_batch: usize| {
        let e = oracle(7, workers, max_batch);
        let x = EncryptedInt::encrypt(&e, 200, 8).unwrap();
        let y = EncryptedInt::encrypt(&e, 100, 8).unwrap();
        let s = int::add_bitwise(&e, &x, &y).unwrap();
        let p = int::mul_karatsuba(&e, &x, &y).unwrap();
        (s, p, e.stats())
    };
    let (s1, p1, st1) = run(1, 4096);
    let (s3, p3, st3) = run(3, 4096);
    let bits = |v: &EncryptedInt| -> Vec<_> { v.bits().iter().map(|b| b.as_lwe().unwrap().clone()).collect() };
    assert_eq!(bits(&s1), bits(&s3));
    assert_eq!(bits(&p1), bits(&p3));
    assert_eq!(st1, st3);

    let (sc, pc, stc) = run(2, 5);
    assert_eq!(bits(&s1), bits(&sc));
    assert_eq!(bits(&p1), bits(&pc));
    assert!(stc.batch_launches > st1.batch_launches);
    assert!(stc.largest_batch <= 5);
    assert_eq!(stc.bootstraps, st1.bootstraps);
}

#[test]
fn batch_cap_splits_launches() {
    let e = reference(2);
    let bits: Vec<_> = (0..10).map(|i| e.encrypt_bit(i % 3 == 0)).collect();
    for (cap, launches) in [(1usize, 10u64), (3, 4), (10, 1), (4096, 1)] {
        e.pool().set_max_batch(cap).unwrap();
        e.reset_stats();
        let out = e.eval_gate_batch(GateKind::Xor, &bits, &bits[..]).unwrap();
        assert!(out.iter().all(|b| !e.decrypt_bit(b).unwrap()));
        assert_eq!(e.stats().batch_launches, launches);
        assert_eq!(e.stats().single_gates, 10);
    }
}

#[test]
fn compound_gate_is_one_launch_of_two_jobs() {
    let e = oracle(3, 1, 4096);
    for (x, y) in [(false, false), (false, true), (true, false), (true, true)] {
        let (cx, cy) = (e.encrypt_bit(x), e.encrypt_bit(y));
        e.reset_stats();
        let (c, s) = e.eval_compound(GateKind::And, GateKind::Xor, &cx, &cy).unwrap();
        assert_eq!(e.decrypt_bit(&c).unwrap(), x & y);
        assert_eq!(e.decrypt_bit(&s).unwrap(), x ^ y);
        let st = e.stats();
        assert_eq!((st.batch_launches, st.compound_gates, st.single_gates, st.bootstraps), (1, 1, 0, 2));
    }
}

#[test]
fn not_is_gate_free_and_involutive() {
    let e = oracle(4, 1, 4096);
    let b = e.encrypt_bit(true);
    e.reset_stats();
    let nb = e.not(&b).unwrap();
    assert!(!e.decrypt_bit(&nb).unwrap());
    assert_eq!(e.not(&nb).unwrap(), b);
    let st = e.stats();
    assert_eq!((st.bootstraps, st.batch_launches, st.negations), (0, 0, 2));
}

#[test]
fn foreign_ciphertexts_are_rejected() {
    let a = oracle(5, 1, 4096);
    let b = oracle(5, 1, 4096);
    let x = a.encrypt_bit(true);
    let y = b.encrypt_bit(true);
    assert!(matches!(a.eval_gate(GateKind::And, &x, &y), Err(Error::EngineMismatch { .. })));
    assert!(matches!(b.decrypt_bit(&x), Err(Error::EngineMismatch { .. })));
    let r = reference(1);
    assert!(matches!(r.not(&x), Err(Error::EngineMismatch { .. })));
}

#[test]
fn batch_rejects_intra_batch_dependencies() {
    let e = reference(1);
    let x = e.encrypt_bit(true);
    let mut batch = JobBatch::new();
    let slot = batch.push_bits(GateKind::And, &x, &x);
    assert!(matches!(
        batch.push(GateKind::Or, slot, &x),
        Err(Error::DependencyViolation(0))
    ));
    assert_eq!(batch.len(), 1);
}

#[test]
fn workers_can_change_between_batches() {
    let e = reference(1);
    let xs = linalg::EncryptedIntVector::encrypt(&e, &[1, 2, 3, 4, 5], 8).unwrap();
    let want = linalg::vec_mul(&e, &xs, &xs).unwrap().decrypt(&e).unwrap();
    for w in [2, 4, 1] {
        e.pool().set_workers(w).unwrap();
        assert_eq!(linalg::vec_mul(&e, &xs, &xs).unwrap().decrypt(&e).unwrap(), want);
    }
    assert_eq!(e.pool().set_workers(0), Err(Error::InvalidWorkers));
    assert_eq!(e.pool().set_max_batch(0), Err(Error::InvalidMaxBatch));
}

#[test]
fn oracle_matrix_product_matches_plaintext() {
    let e = oracle(6, 1, 4096);
    let x = EncryptedMatrix::encrypt(&e, 2, 2, &[1, 2, 3, 4], 8).unwrap();
    let y = EncryptedMatrix::encrypt(&e, 2, 2, &[5, 6, 7, 8], 8).unwrap();
    assert_eq!(linalg::mat_mul_cannon(&e, &x, &y).unwrap().decrypt(&e).unwrap(), vec![19, 22, 43, 50]);
    assert_eq!(linalg::mat_mul_flat(&e, &x, &y).unwrap().decrypt(&e).unwrap(), vec![19, 22, 43, 50]);
}
