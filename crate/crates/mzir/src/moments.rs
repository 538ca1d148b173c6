//! Exact signal moments and phase sensitivities on the product-sector state.
//!
//! Two signals are supported: the information-recycled `(J_z + L_z)^2`,
//! which counts donor and acceptor particles together, and the plain `J_z^2`
//! read from the acceptor ports alone. Moments come from the derived tables
//! in [`crate::boson`] contracted with per-sector conditional moments; no
//! operator matrix is ever materialized here.

use serde::{Deserialize, Serialize};

use crate::boson::{self, TrigTable};
use crate::channel::{BranchChannel, JointSectorState, SectorDensity};
use crate::error::{Error, Result};

/// Which measurement signal the moments refer to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignalKind {
    /// `S = (J_z + L_z)^2`, all four output ports.
    Recycled,
    /// `S = J_z^2`, acceptor ports only.
    Plain,
}

/// First and second signal moments at one phase, with the analytic
/// derivative of the mean.
#[derive(Debug, Clone, Copy)]
pub struct SignalMoments {
    pub mean: f64,
    pub second: f64,
    pub variance: f64,
    pub dmean_dphi: f64,
    pub phi: f64,
    pub signal_kind: SignalKind,
}

impl SignalMoments {
    /// Error-propagation sensitivity `sqrt(V(S)) / |d<S>/dphi|` at this
    /// phase. Infinite at stationary points; use the dedicated operating
    /// point reports there.
    pub fn delta_phi(&self) -> f64 {
        self.variance.max(0.0).sqrt() / self.dmean_dphi.abs()
    }
}

/// Sensitivity at the operating point plus the bounds it is compared to.
#[derive(Debug, Clone, Copy)]
pub struct SensitivityReport {
    pub delta_phi: f64,
    pub phi_opt: f64,
    /// Mean number of particles inside the interferometer.
    pub n_a: f64,
    /// `sqrt(2 / (N_a (N_a + 2)))`, the recycled-signal ceiling.
    pub bound_heisenberg: f64,
    /// `1/sqrt(F_a)` when the construction pins the Fisher information
    /// (beamsplitter transfer of a pure donor); `None` otherwise.
    pub qcrb: Option<f64>,
}

/// First four moments of the conditional acceptor-number distribution
/// `P(n|N)` for donor occupation `n_in`.
pub fn conditional_moments(channel: &BranchChannel, n_in: usize) -> (f64, f64, f64, f64) {
    let mu = sector_mu(channel.sector(n_in));
    (mu[1], mu[2], mu[3], mu[4])
}

fn sector_mu(sector: &SectorDensity) -> [f64; 5] {
    let mut mu = [1.0, 0.0, 0.0, 0.0, 0.0];
    for (n, p) in sector.probs().iter().enumerate() {
        let n = n as f64;
        let mut pow = n;
        for slot in mu.iter_mut().skip(1) {
            *slot += p * pow;
            pow *= n;
        }
    }
    mu
}

/// Sector-contracted trig coefficients for one joint state and signal; with
/// this in hand, moments at any phase cost a handful of trig evaluations.
#[derive(Debug, Clone)]
pub struct MomentProfile {
    kind: SignalKind,
    mean: Vec<(u8, u8, f64)>,
    second: Vec<(u8, u8, f64)>,
}

impl MomentProfile {
    pub fn new(joint: &JointSectorState, kind: SignalKind) -> Self {
        let t = boson::tables();
        match kind {
            SignalKind::Recycled => {
                Self::with_tables(joint, kind, &t.recycled_mean, &t.recycled_second)
            }
            SignalKind::Plain => Self::with_tables(joint, kind, &t.plain_mean, &t.plain_second),
        }
    }

    /// Same contraction against caller-supplied tables. The validation
    /// harness uses this to inject a perturbed coefficient and prove the
    /// oracle comparison would catch it.
    pub fn with_tables(
        joint: &JointSectorState,
        kind: SignalKind,
        mean: &TrigTable,
        second: &TrigTable,
    ) -> Self {
        let mus: Vec<[f64; 5]> = (0..=joint.n_max())
            .map(|n| sector_mu(joint.sector(n)))
            .collect();
        let weights = joint.weights();
        let contract = |table: &TrigTable| -> Vec<(u8, u8, f64)> {
            table
                .0
                .iter()
                .map(|(a, b, poly)| {
                    let val = weights
                        .iter()
                        .zip(&mus)
                        .map(|(p, mu)| p * poly.eval(mu))
                        .sum();
                    (*a, *b, val)
                })
                .collect()
        };
        MomentProfile {
            kind,
            mean: contract(mean),
            second: contract(second),
        }
    }

    pub fn mean_at(&self, phi: f64) -> f64 {
        eval_terms(&self.mean, phi)
    }

    pub fn second_at(&self, phi: f64) -> f64 {
        eval_terms(&self.second, phi)
    }

    pub fn dmean_at(&self, phi: f64) -> f64 {
        let (c, s) = (phi.cos(), phi.sin());
        self.mean
            .iter()
            .map(|&(a, b, v)| {
                let mut d = 0.0;
                if a > 0 {
                    d -= a as f64 * c.powi(a as i32 - 1) * s.powi(b as i32 + 1);
                }
                if b > 0 {
                    d += b as f64 * c.powi(a as i32 + 1) * s.powi(b as i32 - 1);
                }
                v * d
            })
            .sum()
    }

    pub fn moments_at(&self, phi: f64) -> SignalMoments {
        let mean = self.mean_at(phi);
        let second = self.second_at(phi);
        SignalMoments {
            mean,
            second,
            variance: second - mean * mean,
            dmean_dphi: self.dmean_at(phi),
            phi,
            signal_kind: self.kind,
        }
    }

    /// Low-order Taylor data at phi = 0: `(value, phi^1 coeff, phi^2 coeff)`
    /// of a coefficient list, using `cos^a sin^b ~ phi^b (1 - a phi^2 / 2)`.
    fn taylor(terms: &[(u8, u8, f64)]) -> (f64, f64, f64) {
        let mut t0 = 0.0;
        let mut t1 = 0.0;
        let mut t2 = 0.0;
        for &(a, b, v) in terms {
            match b {
                0 => {
                    t0 += v;
                    t2 -= v * a as f64 / 2.0;
                }
                1 => t1 += v,
                2 => t2 += v,
                _ => {}
            }
        }
        (t0, t1, t2)
    }

    /// `(mean phi^2 coefficient, variance phi^2 coefficient)` at the
    /// stationary point phi = 0, for the analytic sensitivity limit.
    fn stationary_limit(&self) -> (f64, f64) {
        let (m0, m1, m2) = Self::taylor(&self.mean);
        let (s0, s1, s2) = Self::taylor(&self.second);
        debug_assert!(m1.abs() < 1e-10 && s1.abs() < 1e-10, "signal is even in phi");
        // V = <S^2> - <S>^2; <S>^2 contributes 2 m0 m2 at second order
        let v2 = s2 - (2.0 * m0 * m2 + m1 * m1);
        debug_assert!((s0 - m0 * m0).abs() <= 1e-9 * (1.0 + s0.abs()));
        (m2, v2)
    }
}

fn eval_terms(terms: &[(u8, u8, f64)], phi: f64) -> f64 {
    let (c, s) = (phi.cos(), phi.sin());
    terms
        .iter()
        .map(|&(a, b, v)| v * c.powi(a as i32) * s.powi(b as i32))
        .sum()
}

/// Moments of the recycled signal at phase `phi`.
pub fn recycled_moments(joint: &JointSectorState, phi: f64) -> SignalMoments {
    MomentProfile::new(joint, SignalKind::Recycled).moments_at(phi)
}

/// Moments of the plain signal at phase `phi`.
pub fn plain_moments(joint: &JointSectorState, phi: f64) -> SignalMoments {
    MomentProfile::new(joint, SignalKind::Plain).moments_at(phi)
}

fn heisenberg_bound_value(n_a: f64) -> f64 {
    (2.0 / (n_a * (n_a + 2.0))).sqrt()
}

fn qcrb_from_provenance(joint: &JointSectorState) -> Option<f64> {
    let prov = joint.provenance();
    let q = prov.beamsplitter_q?;
    if !prov.donor_pure {
        return None;
    }
    let f_b = (prov.donor_v_nt + prov.donor_nt * (prov.donor_nt + 2.0)) / 2.0;
    let f_a = q * q * f_b + (1.0 - q) * q * prov.donor_nt;
    if f_a > 0.0 {
        Some(1.0 / f_a.sqrt())
    } else {
        None
    }
}

/// Recycled-signal sensitivity at its operating point `phi = 0`.
///
/// The point is stationary for both `<S>` and `V(S)`, so the 0/0 ratio is
/// resolved analytically from the quadratic Taylor coefficients of the
/// moment tables rather than by dividing small numbers:
/// `Delta phi = sqrt(V''/2) / (2 <S>''/2) = sqrt(v2) / (2 m2)`.
pub fn recycled_sensitivity(joint: &JointSectorState) -> Result<SensitivityReport> {
    let n_a = joint.mean_acceptor_number();
    if n_a <= 0.0 {
        return Err(Error::NoParticles(n_a));
    }
    let profile = MomentProfile::new(joint, SignalKind::Recycled);
    let (m2, v2) = profile.stationary_limit();
    let delta_phi = v2.max(0.0).sqrt() / (2.0 * m2);
    Ok(SensitivityReport {
        delta_phi,
        phi_opt: 0.0,
        n_a,
        bound_heisenberg: heisenberg_bound_value(n_a),
        qcrb: qcrb_from_provenance(joint),
    })
}

/// Plain-signal sensitivity at its optimal operating point.
///
/// The operating point minimizes `V(Jz^2) cot^2 phi + V(Jx^2) tan^2 phi`, so
/// `phi_opt = atan((V(Jz^2)/V(Jx^2))^(1/4))` and the minimum squared
/// sensitivity is
/// `[2 sqrt(V(Jz^2) V(Jx^2)) + C(Jx^2, Jz^2) + <(JxJz+JzJx)^2>] /
///  [4 (<Jz^2> - <Jx^2>)^2]`.
pub fn plain_sensitivity(joint: &JointSectorState) -> Result<SensitivityReport> {
    let t = boson::tables();
    let mut jz2 = 0.0;
    let mut jx2 = 0.0;
    let mut jz4 = 0.0;
    let mut jx4 = 0.0;
    let mut zx = 0.0;
    let mut anti = 0.0;
    for n in 0..=joint.n_max() {
        let p = joint.weights()[n];
        if p == 0.0 {
            continue;
        }
        let mu = sector_mu(joint.sector(n));
        jz2 += p * t.jz2.eval(&mu);
        jx2 += p * t.jx2.eval(&mu);
        jz4 += p * t.jz4.eval(&mu);
        jx4 += p * t.jx4.eval(&mu);
        zx += p * t.zx_sum.eval(&mu);
        anti += p * t.anti_sq.eval(&mu);
    }
    let denom = jz2 - jx2;
    if denom.abs() < 1e-12 {
        return Err(Error::DegenerateSignal(denom));
    }
    let var_z = (jz4 - jz2 * jz2).max(0.0);
    let var_x = (jx4 - jx2 * jx2).max(0.0);
    let cov = zx - 2.0 * jz2 * jx2;
    let num = 2.0 * (var_z * var_x).sqrt() + cov + anti;
    let delta_phi = (num.max(0.0) / (4.0 * denom * denom)).sqrt();
    let phi_opt = if var_x > 0.0 {
        (var_z / var_x).powf(0.25).atan()
    } else if var_z > 0.0 {
        std::f64::consts::FRAC_PI_2
    } else {
        0.0
    };
    let n_a = joint.mean_acceptor_number();
    if n_a <= 0.0 {
        return Err(Error::NoParticles(n_a));
    }
    Ok(SensitivityReport {
        delta_phi,
        phi_opt,
        n_a,
        bound_heisenberg: heisenberg_bound_value(n_a),
        qcrb: qcrb_from_provenance(joint),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{apply, beamsplitter_channel, dephase, random_channel};
    use crate::donor::{squeezed_vacuum, squeezing_for_mean, twin_fock};

    #[test]
    fn conditional_moments_binomial() {
        let ch = beamsplitter_channel(0.5, 4).unwrap();
        let (m1, m2, _, _) = conditional_moments(&ch, 2);
        assert!((m1 - 1.0).abs() < 1e-13);
        assert!((m2 - 1.5).abs() < 1e-13);
        let ch = beamsplitter_channel(1.0, 4).unwrap();
        assert_eq!(conditional_moments(&ch, 3), (3.0, 9.0, 27.0, 81.0));
        let any = random_channel(4, 9);
        assert_eq!(conditional_moments(&any, 0), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn binomial_moment_identities() {
        // <n>_N = Q N, <n^2>_N = Q N (1-Q) + Q^2 N^2
        let q = 0.37;
        let ch = beamsplitter_channel(q, 9).unwrap();
        for n in 1..=9usize {
            let (m1, m2, _, _) = conditional_moments(&ch, n);
            let nf = n as f64;
            assert!((m1 - q * nf).abs() < 1e-12);
            assert!((m2 - (q * nf * (1.0 - q) + q * q * nf * nf)).abs() < 1e-12);
        }
    }

    #[test]
    fn recycled_mean_vanishes_at_zero() {
        let donor = twin_fock(6).unwrap();
        let ch = beamsplitter_channel(0.8, 3).unwrap();
        let joint = apply(&ch, &donor).unwrap();
        let m = recycled_moments(&joint, 0.0);
        assert!(m.mean.abs() < 1e-13);
        assert!(m.variance.abs() < 1e-12);
    }

    #[test]
    fn plain_mean_at_zero_perfect_transfer() {
        let donor = twin_fock(6).unwrap();
        let ch = beamsplitter_channel(1.0, 3).unwrap();
        let joint = apply(&ch, &donor).unwrap();
        let m = plain_moments(&joint, 0.0);
        assert!(m.mean.abs() < 1e-13);
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let donor = twin_fock(8).unwrap();
        let ch = beamsplitter_channel(0.6, 4).unwrap();
        let joint = apply(&ch, &donor).unwrap();
        for kind in [SignalKind::Recycled, SignalKind::Plain] {
            let profile = MomentProfile::new(&joint, kind);
            for phi in [0.2, 0.7, 1.3] {
                let h = 1e-5;
                let fd = (profile.mean_at(phi + h) - profile.mean_at(phi - h)) / (2.0 * h);
                let an = profile.dmean_at(phi);
                assert!(
                    ((an - fd) / an).abs() < 1e-6,
                    "{kind:?} at {phi}: {an} vs {fd}"
                );
            }
        }
    }

    #[test]
    fn twin_fock_recycled_hits_heisenberg_bound() {
        // Delta phi = sqrt(2 / (Na (Na+2))) independent of the efficiency
        let donor = twin_fock(10).unwrap();
        for q in [0.1, 0.5, 0.9, 1.0] {
            let ch = beamsplitter_channel(q, 5).unwrap();
            let joint = apply(&ch, &donor).unwrap();
            let rep = recycled_sensitivity(&joint).unwrap();
            let n_a = q * 10.0;
            let want = (2.0 / (n_a * (n_a + 2.0))).sqrt();
            assert!(
                ((rep.delta_phi - want) / want).abs() < 1e-12,
                "q={q}: {} vs {want}",
                rep.delta_phi
            );
            assert!((rep.delta_phi - rep.bound_heisenberg).abs() < 1e-12);
        }
    }

    #[test]
    fn twin_fock_q_half_reference_value() {
        let donor = twin_fock(10).unwrap();
        let ch = beamsplitter_channel(0.5, 5).unwrap();
        let joint = apply(&ch, &donor).unwrap();
        let rep = recycled_sensitivity(&joint).unwrap();
        assert!((rep.delta_phi - (2.0f64 / 35.0).sqrt()).abs() < 1e-13);
        assert!((rep.delta_phi - 0.23905).abs() < 1e-5);
    }

    #[test]
    fn squeezed_recycled_reference_value() {
        // Delta phi = 1 / sqrt(Na (Na + 1 + Q)) for squeezed vacuum
        let r = squeezing_for_mean(10.0);
        let donor = squeezed_vacuum(r, 0.0, 1e-12).unwrap();
        let ch = beamsplitter_channel(0.5, donor.n_max()).unwrap();
        let joint = apply(&ch, &donor).unwrap();
        let rep = recycled_sensitivity(&joint).unwrap();
        let want = 1.0 / (5.0f64 * 6.5).sqrt();
        assert!(((rep.delta_phi - want) / want).abs() < 1e-6);
        assert!((rep.delta_phi - 0.17541).abs() < 1e-5);
    }

    #[test]
    fn vacuum_donor_has_no_sensitivity() {
        let donor = twin_fock(0).unwrap();
        let ch = beamsplitter_channel(0.5, 1).unwrap();
        let joint = apply(&ch, &donor).unwrap();
        assert!(matches!(
            recycled_sensitivity(&joint),
            Err(Error::NoParticles(_))
        ));
        // the plain signal is flat in phi for the vacuum: no information
        assert!(matches!(
            plain_sensitivity(&joint),
            Err(Error::DegenerateSignal(_))
        ));
    }

    #[test]
    fn plain_engine_matches_twin_fock_closed_form_at_large_n() {
        let donor = twin_fock(100).unwrap();
        let q = 0.9;
        let ch = beamsplitter_channel(q, donor.n_max()).unwrap();
        let rep = plain_sensitivity(&apply(&ch, &donor).unwrap()).unwrap();
        let want = crate::closed_form::plain_closed_form_tf(q * 100.0, q).unwrap();
        assert!(((rep.delta_phi - want) / want).abs() < 1e-9);
    }

    #[test]
    fn plain_engine_matches_squeezed_closed_form_at_large_n() {
        // truncation-limited agreement on a wide squeezed state
        let n_t = 100.0;
        let r = crate::donor::squeezing_for_mean(n_t);
        let donor = squeezed_vacuum(r, 0.0, 1e-12).unwrap();
        let q = 0.9;
        let ch = beamsplitter_channel(q, donor.n_max()).unwrap();
        let rep = plain_sensitivity(&apply(&ch, &donor).unwrap()).unwrap();
        let want = crate::closed_form::plain_closed_form_sq(q * n_t, q).unwrap();
        assert!(((rep.delta_phi - want) / want).abs() < 1e-6);
    }

    #[test]
    fn plain_perfect_transfer_saturates_qcrb() {
        // Q = 1 twin-Fock: Delta phi = sqrt(2 / (Nt (Nt + 2)))
        let donor = twin_fock(10).unwrap();
        let ch = beamsplitter_channel(1.0, 5).unwrap();
        let joint = apply(&ch, &donor).unwrap();
        let rep = plain_sensitivity(&joint).unwrap();
        let want = (2.0f64 / (10.0 * 12.0)).sqrt();
        assert!(((rep.delta_phi - want) / want).abs() < 1e-12);
        assert!((rep.phi_opt).abs() < 1e-12);
        let qcrb = rep.qcrb.unwrap();
        assert!((rep.delta_phi - qcrb).abs() < 1e-12);
    }

    #[test]
    fn plain_optimal_point_matches_grid_search() {
        let donor = twin_fock(8).unwrap();
        let ch = beamsplitter_channel(0.75, 4).unwrap();
        let joint = apply(&ch, &donor).unwrap();
        let rep = plain_sensitivity(&joint).unwrap();
        // refine a dense grid with golden-section around the best point
        let profile = MomentProfile::new(&joint, SignalKind::Plain);
        let dphi = |phi: f64| profile.moments_at(phi).delta_phi();
        let n = 10_000;
        let mut best = (f64::INFINITY, 0.0);
        for i in 1..n {
            let phi = std::f64::consts::FRAC_PI_2 * i as f64 / n as f64;
            let v = dphi(phi);
            if v < best.0 {
                best = (v, phi);
            }
        }
        let (mut lo, mut hi) = (best.1 - 2e-4, best.1 + 2e-4);
        let g = (5.0f64.sqrt() - 1.0) / 2.0;
        for _ in 0..80 {
            let a = hi - g * (hi - lo);
            let b = lo + g * (hi - lo);
            if dphi(a) < dphi(b) {
                hi = b;
            } else {
                lo = a;
            }
        }
        let phi_star = 0.5 * (lo + hi);
        assert!(
            (phi_star - rep.phi_opt).abs() < 1e-6,
            "grid {phi_star} vs analytic {}",
            rep.phi_opt
        );
        let min_val = dphi(phi_star);
        assert!(((min_val - rep.delta_phi) / min_val).abs() < 1e-8);
    }

    #[test]
    fn recycled_beats_plain_at_operating_points() {
        let donor = twin_fock(12).unwrap();
        for q in [0.3, 0.8] {
            let ch = beamsplitter_channel(q, 6).unwrap();
            let joint = apply(&ch, &donor).unwrap();
            let rec = recycled_sensitivity(&joint).unwrap();
            let plain = plain_sensitivity(&joint).unwrap();
            assert!(rec.delta_phi <= plain.delta_phi + 1e-12);
            assert!(rec.delta_phi >= rec.qcrb.unwrap() - 1e-10);
        }
    }

    #[test]
    fn dephasing_leaves_recycled_sensitivity_unchanged() {
        let donor = twin_fock(6).unwrap();
        let ch = beamsplitter_channel(0.7, 3).unwrap();
        let joint = apply(&ch, &donor).unwrap();
        let joint_deph = apply(&dephase(&ch), &donor).unwrap();
        let a = recycled_sensitivity(&joint).unwrap().delta_phi;
        let b = recycled_sensitivity(&joint_deph).unwrap().delta_phi;
        assert!((a - b).abs() < 1e-12);
    }
}
