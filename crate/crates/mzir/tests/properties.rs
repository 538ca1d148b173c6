//! Property-based invariants over randomized states, channels, and phases.

use ndarray::Array2;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mzir::linalg::{adjoint, fro_norm, identity};
use mzir::{
    apply, beamsplitter_channel, brute_force_joint_state, brute_force_moments, custom_state,
    mz_rotation, plain_sensitivity, random_channel, recycled_sensitivity, squeezed_vacuum,
    twin_fock, MomentProfile, NumberCorrelatedState, SignalKind,
};

fn build_spin(n: usize) -> (Array2<Complex64>, Array2<Complex64>) {
    let (jx, _, jz) = mzir::build_spin_operators(n);
    (jx.matrix, jz.matrix)
}

fn diagonal_donor(n_max: usize, seed: u64) -> NumberCorrelatedState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = n_max + 1;
    let mut p: Vec<f64> = (0..dim).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= total);
    let mut rho = Array2::<Complex64>::zeros((dim, dim));
    for (n, &pn) in p.iter().enumerate() {
        rho[[n, n]] = Complex64::new(pn, 0.0);
    }
    custom_state(rho).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Rotations compose with their inverses to the identity.
    #[test]
    fn prop_rotation_inverse(n in 0usize..10, phi in -3.0f64..3.0) {
        let u = mz_rotation(n, phi);
        let v = mz_rotation(n, -phi);
        let defect = fro_norm(&(u.matrix.dot(&v.matrix) - identity(n + 1)));
        prop_assert!(defect < 1e-12, "defect {defect:e}");
    }

    /// Conjugation by the rotation tilts J_z into the J_x direction.
    #[test]
    fn prop_rotation_conjugates_jz(n in 1usize..9, phi in -3.0f64..3.0) {
        let (jx, jz) = build_spin(n);
        let u = mz_rotation(n, phi).matrix;
        let got = adjoint(&u).dot(&jz).dot(&u);
        let want = jz.mapv(|z| z * phi.cos()) - jx.mapv(|z| z * phi.sin());
        prop_assert!(fro_norm(&(got - want)) < 1e-10);
    }

    /// Random channels are valid, keep the acceptor correlator convex, and
    /// never push the recycled sensitivity past its ceiling.
    #[test]
    fn prop_random_channel_convexity(seed in any::<u64>(), n_max in 1usize..7, donor_seed in any::<u64>()) {
        let channel = random_channel(n_max, seed);
        prop_assert!(channel.validate().is_ok());
        let donor = diagonal_donor(n_max, donor_seed);
        let joint = apply(&channel, &donor).unwrap();
        let mut n1n2 = 0.0;
        let mut n1 = 0.0;
        for n in 0..=joint.n_max() {
            let mean: f64 = joint.sector(n).probs().iter().enumerate()
                .map(|(k, p)| k as f64 * p)
                .sum();
            n1n2 += joint.weights()[n] * mean * mean;
            n1 += joint.weights()[n] * mean;
        }
        prop_assert!(n1n2 >= n1 * n1 - 1e-10);
        if let Ok(rep) = recycled_sensitivity(&joint) {
            prop_assert!(rep.delta_phi <= rep.bound_heisenberg + 1e-12);
        }
    }

    /// Squeezed construction conserves probability and moment ordering.
    #[test]
    fn prop_squeezed_normalization(r in 0.0f64..2.0, theta in 0.0f64..6.2, log_tol in -12.0f64..-4.0) {
        let s = squeezed_vacuum(r, theta, 10f64.powf(log_tol)).unwrap();
        let sum: f64 = s.probabilities().iter().sum();
        prop_assert!((sum + s.tail_mass() - 1.0).abs() < 1e-14);
        prop_assert!(s.probabilities().iter().all(|&p| p >= 0.0));
        let m1 = mzir::nt_moments(&s, 1);
        let m2 = mzir::nt_moments(&s, 2);
        let m4 = mzir::nt_moments(&s, 4);
        prop_assert!(m2 >= m1 * m1 - 1e-10);
        prop_assert!(m4 >= m1.powi(4) - 1e-6 * m1.powi(4).max(1.0));
    }

    /// Engine moments agree with the brute-force oracle on random inputs.
    #[test]
    fn prop_engine_matches_oracle(seed in any::<u64>(), donor_seed in any::<u64>(), phi in 0.0f64..3.0) {
        let channel = random_channel(3, seed);
        let donor = diagonal_donor(3, donor_seed);
        let joint = apply(&channel, &donor).unwrap();
        let state = brute_force_joint_state(&donor, &channel, 3).unwrap();
        for kind in [SignalKind::Recycled, SignalKind::Plain] {
            let engine = MomentProfile::new(&joint, kind).moments_at(phi);
            let oracle = brute_force_moments(&state, phi, kind == SignalKind::Recycled);
            prop_assert!((engine.mean - oracle.mean).abs() < 1e-10);
            prop_assert!((engine.second - oracle.second).abs() < 1e-10);
        }
    }

    /// The recycled sensitivity never beats its Heisenberg-type ceiling,
    /// and never loses to the plain signal on beamsplitter transfer.
    #[test]
    fn prop_bound_and_dominance(donor_seed in any::<u64>(), q in 0.05f64..1.0) {
        let donor = diagonal_donor(4, donor_seed);
        let channel = beamsplitter_channel(q, 4).unwrap();
        let joint = apply(&channel, &donor).unwrap();
        let rec = recycled_sensitivity(&joint).unwrap();
        prop_assert!(rec.delta_phi <= rec.bound_heisenberg + 1e-12);
        // a degenerate plain signal carries no information to compare to
        if let Ok(plain) = plain_sensitivity(&joint) {
            prop_assert!(rec.delta_phi <= plain.delta_phi + 1e-12);
        }
    }

    /// State serialization round-trips bit for bit.
    #[test]
    fn prop_state_roundtrip(r in 0.0f64..1.5, theta in 0.0f64..6.2) {
        let s = squeezed_vacuum(r, theta, 1e-8).unwrap();
        let back = mzir::io::state_from_json(&mzir::io::state_to_json(&s)).unwrap();
        prop_assert_eq!(back.n_max(), s.n_max());
        for m in 0..=s.n_max() {
            for n in 0..=s.n_max() {
                prop_assert_eq!(back.element(m, n), s.element(m, n));
            }
        }
    }

    /// Channel serialization preserves every sector entry.
    #[test]
    fn prop_channel_roundtrip(seed in any::<u64>(), n_max in 1usize..5) {
        let ch = random_channel(n_max, seed);
        let back = mzir::io::channel_from_json(&mzir::io::channel_to_json(&ch)).unwrap();
        for n in 0..=n_max {
            for m in 0..=n {
                for k in 0..=n {
                    let d = (ch.sector(n).element(m, k) - back.sector(n).element(m, k)).norm();
                    prop_assert!(d < 1e-15);
                }
            }
        }
    }

    /// Twin-Fock donors give efficiency-independent recycled sensitivity.
    #[test]
    fn prop_twin_fock_q_independence(m in 1u64..8, q in 0.05f64..1.0) {
        let donor = twin_fock(2 * m).unwrap();
        let channel = beamsplitter_channel(q, donor.n_max()).unwrap();
        let rep = recycled_sensitivity(&apply(&channel, &donor).unwrap()).unwrap();
        let n_a = q * 2.0 * m as f64;
        let want = (2.0 / (n_a * (n_a + 2.0))).sqrt();
        prop_assert!(((rep.delta_phi - want) / want).abs() < 1e-9);
    }
}
