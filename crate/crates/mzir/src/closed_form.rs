//! Closed-form sensitivities, Fisher informations, and bounds.
//!
//! Every function here is O(1) in the state size: inputs are scalar moments
//! of the total particle number, never Fock objects, so each expression can
//! be cross-checked against the moment engine without sharing any code path
//! with it. The two donor-specific optimal-point forms are transcribed
//! exactly as printed and re-derived through the general moment form; tests
//! fail the build if the routes disagree.

use crate::channel::{ChannelKind, JointSectorState, SectorDensity};
use crate::donor::{nt_moments, NumberCorrelatedState};
use crate::error::{Error, Result};

/// Donor and acceptor Fisher information for one beamsplitter setting.
#[derive(Debug, Clone, Copy)]
pub struct FisherReport {
    pub f_b: f64,
    pub f_a: f64,
    pub qcrb_b: f64,
    pub qcrb_a: f64,
}

/// Donor-state quantum Fisher information `(V(N_t) + N_t (N_t + 2)) / 2`.
pub fn fisher_donor(v_nt: f64, n_t: f64) -> f64 {
    assert!(v_nt >= 0.0 && n_t >= 0.0);
    (v_nt + n_t * (n_t + 2.0)) / 2.0
}

/// Interferometer sensitivity of the bare donor state at its operating
/// point: `sqrt(2 / (V(N_t) + N_t (N_t + 2)))`, equal to `1/sqrt(F_b)`.
pub fn delta_phi_mz(v_nt: f64, n_t: f64) -> Result<f64> {
    if n_t <= 0.0 {
        return Err(Error::NoParticles(n_t));
    }
    Ok((2.0 / (v_nt + n_t * (n_t + 2.0))).sqrt())
}

/// Ceiling on the recycled sensitivity: `sqrt(2 / (N_a (N_a + 2)))`.
pub fn heisenberg_bound(n_a: f64) -> Result<f64> {
    if n_a <= 0.0 {
        return Err(Error::NoParticles(n_a));
    }
    Ok((2.0 / (n_a * (n_a + 2.0))).sqrt())
}

/// Recycled sensitivity through a beamsplitter of efficiency `q`:
/// `sqrt(2 / (q^2 V(N_t) + N_a (N_a + 2)))` with `N_a = q N_t`.
pub fn delta_phi_recycled_bs(v_nt: f64, n_t: f64, q: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&q) || q == 0.0 {
        return Err(Error::BadEfficiency(q));
    }
    if n_t <= 0.0 {
        return Err(Error::NoParticles(n_t));
    }
    let n_a = q * n_t;
    Ok((2.0 / (q * q * v_nt + n_a * (n_a + 2.0))).sqrt())
}

/// Acceptor Fisher information for beamsplitter transfer of a pure donor:
/// `F_a = q^2 F_b + (1 - q) N_a`.
pub fn fisher_acceptor_bs(f_b: f64, n_a: f64, q: f64) -> f64 {
    assert!(f_b >= 0.0 && n_a >= 0.0 && (0.0..=1.0).contains(&q));
    q * q * f_b + (1.0 - q) * n_a
}

/// The same quantity assembled from moments instead:
/// `F_a = (q^2 V(N_t) + N_a (N_a + 2)) / 2`. Agrees with
/// [`fisher_acceptor_bs`] to rounding; tests pin the two routes together.
pub fn fisher_acceptor_bs_from_moments(v_nt: f64, n_t: f64, q: f64) -> f64 {
    let n_a = q * n_t;
    (q * q * v_nt + n_a * (n_a + 2.0)) / 2.0
}

/// Both Fisher informations and their Cramer-Rao sensitivities.
pub fn fisher_report(v_nt: f64, n_t: f64, q: f64) -> Result<FisherReport> {
    if n_t <= 0.0 {
        return Err(Error::NoParticles(n_t));
    }
    let f_b = fisher_donor(v_nt, n_t);
    let f_a = fisher_acceptor_bs(f_b, q * n_t, q);
    Ok(FisherReport {
        f_b,
        f_a,
        qcrb_b: 1.0 / f_b.sqrt(),
        qcrb_a: 1.0 / f_a.sqrt(),
    })
}

/// Plain-signal optimal-point sensitivity for a twin-Fock donor.
pub fn plain_closed_form_tf(n_a: f64, q: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&q) || q == 0.0 {
        return Err(Error::BadEfficiency(q));
    }
    if n_a <= 0.0 {
        return Err(Error::NoParticles(n_a));
    }
    let a_tf = (n_a - 2.0) * (n_a + 2.0) * (n_a + 4.0)
        + 12.0 * (1.0 - q) * (2.0 + n_a * (n_a + 3.0 - q));
    let radicand = 0.5 * (1.0 - q) * (1.0 + 2.0 * (1.0 - q) * (n_a - 3.0 * q)) * a_tf;
    let sq = (2.0 * (n_a + 2.0 * q)
        + radicand.max(0.0).sqrt()
        + 2.0 * (1.0 - q) * (1.0 + (n_a - 3.0 * q) * (n_a + 2.0)))
        / (n_a * (n_a + 2.0 * q).powi(2));
    Ok(sq.sqrt())
}

/// Plain-signal optimal-point sensitivity for a squeezed-vacuum donor.
pub fn plain_closed_form_sq(n_a: f64, q: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&q) || q == 0.0 {
        return Err(Error::BadEfficiency(q));
    }
    if n_a <= 0.0 {
        return Err(Error::NoParticles(n_a));
    }
    let a_sq = (1.0 - q) * (1.0 - 10.0 * q * (1.0 - q))
        + (n_a + 2.0 * q) * (9.0 - 5.0 * q * (2.0 - q) + 8.0 * n_a * (n_a + 2.0));
    let radicand = (1.0 - q) * (1.0 + 5.0 * (1.0 - q) * n_a) * a_sq;
    let sq = (2.0 * (n_a + 2.0 * q)
        + radicand.max(0.0).sqrt()
        + (1.0 - q) * (1.0 + n_a * (5.0 * (1.0 - q) + 8.0 * (n_a + 2.0 * q))))
        / (2.0 * n_a * (n_a + 2.0 * q).powi(2));
    Ok(sq.sqrt())
}

/// The first four moments of the total particle number.
#[derive(Debug, Clone, Copy)]
pub struct NtMoments {
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
    pub m4: f64,
}

impl NtMoments {
    /// Tail-corrected moments of a donor state.
    pub fn of(state: &NumberCorrelatedState) -> Self {
        NtMoments {
            m1: nt_moments(state, 1),
            m2: nt_moments(state, 2),
            m3: nt_moments(state, 3),
            m4: nt_moments(state, 4),
        }
    }

    fn check_convexity(&self) -> Result<()> {
        for (k, value) in [(2u32, self.m2), (3, self.m3), (4, self.m4)] {
            let bound = self.m1.powi(k as i32);
            if value < bound - 1e-9 * bound.abs().max(1.0) {
                return Err(Error::BadMoments { k, value, bound });
            }
        }
        Ok(())
    }
}

/// Plain-signal optimal-point sensitivity for an arbitrary donor, written
/// in terms of its total-number moments and the transfer efficiency.
///
/// This is the general form the two donor-specific expressions specialize;
/// with twin-Fock moments it reproduces [`plain_closed_form_tf`] and with
/// squeezed-vacuum moments [`plain_closed_form_sq`], both to rounding.
pub fn plain_closed_form_general(moments: NtMoments, q: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&q) || q == 0.0 {
        return Err(Error::BadEfficiency(q));
    }
    moments.check_convexity()?;
    let NtMoments { m1: n_t, m2, m3, m4 } = moments;
    if n_t <= 0.0 {
        return Err(Error::NoParticles(n_t));
    }
    let v_nt = m2 - n_t * n_t;
    let f_b = fisher_donor(v_nt.max(0.0), n_t);
    let load = q * f_b + (1.0 - q) * n_t;
    let a_cal = 8.0 * load * (10.0 - 3.0 * q * (4.0 - q) - q * load)
        - 24.0 * (3.0 - q * (3.0 - q)) * n_t
        + 3.0 * q * q * (q * m4 + 4.0 * (2.0 - q) * m3);
    let radicand = 0.5
        * (1.0 - q)
        * (n_t + q * (1.0 - q) * (6.0 * (f_b - 2.0 * n_t) - n_t * n_t))
        * a_cal;
    let brace = radicand.max(0.0).sqrt()
        + (1.0 - q)
            * (q * q * (3.0 * m3 - 2.0 * f_b * n_t)
                + 4.0 * q * (4.0 - q * (2.0 + q) * (1.0 - q)) * f_b
                - 2.0 * n_t * (5.0 + (1.0 - q) * (q * n_t - 6.0 * (1.0 - q))));
    let sq = q * q / f_b + brace / (4.0 * q.powi(3) * f_b * f_b);
    Ok(sq.sqrt())
}

/// One row of the efficiency sweep: sensitivities of both reference donors
/// against the benchmark scalings at a single transfer efficiency.
#[derive(Debug, Clone, Copy)]
pub struct SweepRow {
    pub q: f64,
    pub delta_phi_tf_plain: f64,
    pub delta_phi_sq_plain: f64,
    pub delta_phi_recycled_tf: f64,
    pub delta_phi_recycled_sq: f64,
    /// Shot-noise line `1/sqrt(N_a)`.
    pub qnl: f64,
    /// Heisenberg line `1/N_a`.
    pub heisenberg: f64,
}

/// Closed-form sensitivity curves over an efficiency grid `q = i/points`,
/// `i = 1..=points`, for twin-Fock and squeezed donors of mean total number
/// `n_t`. O(1) per point.
pub fn efficiency_sweep(n_t: f64, points: usize) -> Result<Vec<SweepRow>> {
    if n_t <= 0.0 {
        return Err(Error::NoParticles(n_t));
    }
    let v_sq = n_t * (n_t + 2.0);
    (1..=points)
        .map(|i| {
            let q = i as f64 / points as f64;
            let n_a = q * n_t;
            Ok(SweepRow {
                q,
                delta_phi_tf_plain: plain_closed_form_tf(n_a, q)?,
                delta_phi_sq_plain: plain_closed_form_sq(n_a, q)?,
                delta_phi_recycled_tf: delta_phi_recycled_bs(0.0, n_t, q)?,
                delta_phi_recycled_sq: delta_phi_recycled_bs(v_sq, n_t, q)?,
                qnl: 1.0 / n_a.sqrt(),
                heisenberg: 1.0 / n_a,
            })
        })
        .collect()
}

/// Which generator the Fisher information refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Donor,
    Acceptor,
}

/// Pure-state quantum Fisher information `4 Var(generator)` evaluated
/// numerically in the sector representation.
///
/// Valid only when the global state is pure: the donor must be rank one and
/// the transfer a beamsplitter (the one channel kind here that preserves
/// purity). Per sector the generator maps the state onto mutually orthogonal
/// occupation states, so the variance is a weighted sum of squared ladder
/// amplitudes; the generator's mean vanishes because none of those states
/// overlaps the original.
pub fn qfi_pure_numeric(joint: &JointSectorState, side: Side) -> Result<f64> {
    let prov = joint.provenance();
    if !prov.donor_pure {
        return Err(Error::NotPure("donor state is mixed"));
    }
    if !matches!(
        joint_kind(joint),
        Some(ChannelKind::Beamsplitter { .. })
    ) {
        return Err(Error::NotPure("channel does not preserve purity"));
    }
    let mut total = 0.0;
    for n in 0..=joint.n_max() {
        let p = joint.weights()[n];
        if p == 0.0 {
            continue;
        }
        let probs = joint.sector(n).probs();
        let mut sector_sum = 0.0;
        for (m1, w1) in probs.iter().enumerate() {
            if *w1 == 0.0 {
                continue;
            }
            for (m2, w2) in probs.iter().enumerate() {
                if *w2 == 0.0 {
                    continue;
                }
                let (x1, x2) = match side {
                    Side::Acceptor => (m1 as f64, m2 as f64),
                    Side::Donor => ((n - m1) as f64, (n - m2) as f64),
                };
                // |<raised/lowered pair|generator|state>|^2 ladder weights
                sector_sum += w1 * w2 * ((x1 + 1.0) * x2 + x1 * (x2 + 1.0)) / 4.0;
            }
        }
        total += p * sector_sum;
    }
    Ok(4.0 * total)
}

fn joint_kind(joint: &JointSectorState) -> Option<ChannelKind> {
    let q = joint.provenance().beamsplitter_q?;
    // the sectors of a beamsplitter joint are rank-one amplitude vectors
    let all_pure = (0..=joint.n_max())
        .all(|n| matches!(joint.sector(n), SectorDensity::Pure(_)));
    all_pure.then_some(ChannelKind::Beamsplitter { q })
}
