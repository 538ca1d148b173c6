//! Monte Carlo simulation of the four-port number measurement and
//! method-of-moments phase estimation.
//!
//! Sampling follows the product-sector structure directly: draw the donor
//! sector, draw each branch's transferred count from the conditional
//! distribution (a donor-number measurement diagonalizes the branch state,
//! since its coherences connect orthogonal donor occupations), then push the
//! two acceptor counts through an exact sector rotation matrix.
//!
//! Randomness comes from a ChaCha8 stream cipher keyed by the run seed, with
//! one stream per shot index. Shots are therefore reproducible individually,
//! in any order, on any worker layout.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::JointSectorState;
use crate::error::{Error, Result};
use crate::moments::{MomentProfile, SignalKind};
use crate::sector::mz_rotation;

/// Photon counts at the four output ports of one shot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MeasurementRecord {
    pub d1: u32,
    pub d2: u32,
    pub k1: u32,
    pub k2: u32,
}

impl MeasurementRecord {
    /// The donor sector this shot came from: `(d1 + d2 + k1 + k2) / 2`.
    pub fn sector(&self) -> u32 {
        (self.d1 + self.d2 + self.k1 + self.k2) / 2
    }
}

/// The scalar signal of one shot.
pub fn signal_from_record(rec: &MeasurementRecord, recycled: bool) -> f64 {
    let acc = (rec.k1 as f64 - rec.k2 as f64) / 2.0;
    if recycled {
        let don = (rec.d1 as f64 - rec.d2 as f64) / 2.0;
        (acc + don) * (acc + don)
    } else {
        acc * acc
    }
}

/// A bisection phase estimate, flagged when the sample mean fell outside the
/// attainable signal range and the result was clamped to an endpoint.
#[derive(Debug, Clone, Copy)]
pub struct PhaseEstimate {
    pub phi: f64,
    pub clamped: bool,
}

/// One full estimation experiment.
#[derive(Debug, Clone)]
pub struct EstimationRun {
    pub phi_true: f64,
    pub shots_per_estimate: usize,
    pub n_estimates: usize,
    pub seed: u64,
    pub estimates: Vec<f64>,
    pub rmse: f64,
}

struct Sampler {
    sector_cdf: Vec<f64>,
    cond_cdf: Vec<Vec<f64>>,
    /// per acceptor total: column-major conditional CDFs of |U|^2
    rotation_cdf: Vec<Vec<Vec<f64>>>,
}

impl Sampler {
    fn new(joint: &JointSectorState, phi: f64) -> Self {
        let total: f64 = joint.weights().iter().sum();
        let mut acc = 0.0;
        let sector_cdf = joint
            .weights()
            .iter()
            .map(|p| {
                acc += p / total;
                acc
            })
            .collect();
        let cond_cdf = (0..=joint.n_max())
            .map(|n| {
                let mut acc = 0.0;
                joint
                    .sector(n)
                    .probs()
                    .iter()
                    .map(|p| {
                        acc += p;
                        acc
                    })
                    .collect()
            })
            .collect();
        let rotation_cdf = (0..=2 * joint.n_max())
            .map(|a| {
                let u = mz_rotation(a, phi);
                (0..=a)
                    .map(|col| {
                        let mut acc = 0.0;
                        (0..=a)
                            .map(|row| {
                                acc += u.matrix[[row, col]].norm_sqr();
                                acc
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        Sampler {
            sector_cdf,
            cond_cdf,
            rotation_cdf,
        }
    }

    fn draw(cdf: &[f64], u: f64) -> usize {
        cdf.partition_point(|&c| c < u).min(cdf.len() - 1)
    }

    fn shot(&self, rng: &mut ChaCha8Rng) -> MeasurementRecord {
        let n = Self::draw(&self.sector_cdf, rng.gen());
        let m1 = Self::draw(&self.cond_cdf[n], rng.gen());
        let m2 = Self::draw(&self.cond_cdf[n], rng.gen());
        let total = m1 + m2;
        // sector row index is the mode-2 occupation; |m1, m2> is column m2
        let k2 = Self::draw(&self.rotation_cdf[total][m2], rng.gen());
        let k1 = total - k2;
        MeasurementRecord {
            d1: (n - m1) as u32,
            d2: (n - m2) as u32,
            k1: k1 as u32,
            k2: k2 as u32,
        }
    }
}

fn sample_indexed(
    sampler: &Sampler,
    seed: u64,
    start_index: u64,
    shots: usize,
) -> Vec<MeasurementRecord> {
    (0..shots as u64)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(start_index + i);
            sampler.shot(&mut rng)
        })
        .collect()
}

/// Simulate `shots` four-port measurements at phase `phi`.
///
/// Shot `i` consumes stream `i` of the seeded generator; see the module
/// notes on reproducibility.
pub fn sample_counts(
    joint: &JointSectorState,
    phi: f64,
    shots: usize,
    seed: u64,
) -> Vec<MeasurementRecord> {
    assert!(shots >= 1, "need at least one shot");
    let sampler = Sampler::new(joint, phi);
    sample_indexed(&sampler, seed, 0, shots)
}

/// Invert the analytic mean-signal curve on `(0, pi/2)` at the sample mean
/// of the recorded signals.
pub fn estimate_phase(
    records: &[MeasurementRecord],
    joint: &JointSectorState,
    recycled: bool,
) -> Result<PhaseEstimate> {
    if records.is_empty() {
        return Err(Error::NoRecords);
    }
    let kind = if recycled {
        SignalKind::Recycled
    } else {
        SignalKind::Plain
    };
    let profile = MomentProfile::new(joint, kind);
    let target = records
        .iter()
        .map(|r| signal_from_record(r, recycled))
        .sum::<f64>()
        / records.len() as f64;
    invert_mean(&profile, target)
}

fn invert_mean(profile: &MomentProfile, target: f64) -> Result<PhaseEstimate> {
    let hi = std::f64::consts::FRAC_PI_2;
    // monotonicity check: the derivative may not change sign inside the
    // interval (it vanishes at the endpoints for these signals)
    let probes = 64;
    let mut sign = 0.0f64;
    for i in 1..probes {
        let phi = hi * i as f64 / probes as f64;
        let d = profile.dmean_at(phi);
        if d.abs() < 1e-14 {
            continue;
        }
        if sign == 0.0 {
            sign = d.signum();
        } else if d.signum() != sign {
            return Err(Error::NonMonotone(phi));
        }
    }
    if sign == 0.0 {
        return Err(Error::NonMonotone(0.0));
    }
    let f = |phi: f64| profile.mean_at(phi) - target;
    let (f_lo, f_hi) = (f(0.0), f(hi));
    if (f_lo > 0.0 && f_hi > 0.0) || (f_lo < 0.0 && f_hi < 0.0) {
        // outside the attainable range: clamp to the nearer endpoint
        let phi = if f_lo.abs() <= f_hi.abs() { 0.0 } else { hi };
        return Ok(PhaseEstimate { phi, clamped: true });
    }
    let (mut lo, mut hi) = (0.0f64, hi);
    let mut g_lo = f_lo;
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        let g_mid = f(mid);
        if (g_lo <= 0.0) == (g_mid <= 0.0) {
            lo = mid;
            g_lo = g_mid;
        } else {
            hi = mid;
        }
    }
    Ok(PhaseEstimate {
        phi: 0.5 * (lo + hi),
        clamped: false,
    })
}

/// Run `n_estimates` independent batches of `shots_per_estimate` shots each
/// and collect the root-mean-square estimation error.
///
/// Batch `b` uses shot streams `b * shots .. (b+1) * shots`, so recycled and
/// plain runs with the same seed see identical measurement records.
pub fn empirical_sensitivity(
    joint: &JointSectorState,
    recycled: bool,
    phi_true: f64,
    shots_per_estimate: usize,
    n_estimates: usize,
    seed: u64,
) -> Result<EstimationRun> {
    assert!(shots_per_estimate >= 1 && n_estimates >= 1);
    let sampler = Sampler::new(joint, phi_true);
    let kind = if recycled {
        SignalKind::Recycled
    } else {
        SignalKind::Plain
    };
    let profile = MomentProfile::new(joint, kind);
    let mut estimates = Vec::with_capacity(n_estimates);
    for batch in 0..n_estimates {
        let records = sample_indexed(
            &sampler,
            seed,
            (batch * shots_per_estimate) as u64,
            shots_per_estimate,
        );
        let target = records
            .iter()
            .map(|r| signal_from_record(r, recycled))
            .sum::<f64>()
            / records.len() as f64;
        estimates.push(invert_mean(&profile, target)?.phi);
    }
    let rmse = (estimates
        .iter()
        .map(|e| (e - phi_true) * (e - phi_true))
        .sum::<f64>()
        / n_estimates as f64)
        .sqrt();
    Ok(EstimationRun {
        phi_true,
        shots_per_estimate,
        n_estimates,
        seed,
        estimates,
        rmse,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{apply, beamsplitter_channel};
    use crate::donor::twin_fock;

    fn joint_tf(n_total: u64, q: f64) -> JointSectorState {
        let donor = twin_fock(n_total).unwrap();
        let ch = beamsplitter_channel(q, donor.n_max()).unwrap();
        apply(&ch, &donor).unwrap()
    }

    #[test]
    fn signal_values_are_direct_arithmetic() {
        let r = MeasurementRecord { d1: 0, d2: 0, k1: 1, k2: 1 };
        assert_eq!(signal_from_record(&r, true), 0.0);
        let r = MeasurementRecord { d1: 1, d2: 0, k1: 0, k2: 1 };
        assert_eq!(signal_from_record(&r, true), 0.0);
        assert_eq!(signal_from_record(&r, false), 0.25);
    }

    #[test]
    fn zero_phase_returns_transferred_counts() {
        let joint = joint_tf(6, 0.5);
        for rec in sample_counts(&joint, 0.0, 200, 7) {
            // k_j = m_j at the identity rotation, so branch totals match
            assert_eq!(rec.d1 + rec.k1, 3);
            assert_eq!(rec.d2 + rec.k2, 3);
        }
    }

    #[test]
    fn per_shot_conservation() {
        let joint = joint_tf(8, 0.7);
        for rec in sample_counts(&joint, 0.9, 500, 3) {
            assert_eq!(rec.d1 + rec.d2 + rec.k1 + rec.k2, 8);
            assert_eq!(rec.sector(), 4);
        }
    }

    #[test]
    fn sampling_is_deterministic_in_seed() {
        let joint = joint_tf(6, 0.6);
        let a = sample_counts(&joint, 0.4, 100, 11);
        let b = sample_counts(&joint, 0.4, 100, 11);
        assert_eq!(a, b);
        let c = sample_counts(&joint, 0.4, 100, 12);
        assert_ne!(a, c);
    }

    #[test]
    fn binomial_marginal_within_sampling_bands() {
        // single particle per branch at q = 0.5: mean of m1 is 0.5 with
        // binomial standard error sqrt(0.25/shots); allow 3 sigma
        let joint = joint_tf(2, 0.5);
        let shots = 100_000;
        let recs = sample_counts(&joint, 0.0, shots, 1);
        let mean =
            recs.iter().map(|r| (1 - r.d1) as f64).sum::<f64>() / shots as f64;
        let sigma = (0.25 / shots as f64).sqrt();
        assert!((mean - 0.5).abs() < 3.0 * sigma, "mean {mean}");
    }

    #[test]
    fn interference_distribution_matches_sector_rotation() {
        // |1,1> acceptor input at a quarter turn: the two particles bunch,
        // so (1,1) never appears and (2,0)/(0,2) split evenly
        let joint = joint_tf(2, 1.0);
        let phi = std::f64::consts::FRAC_PI_2;
        let u = mz_rotation(2, phi);
        let reference: Vec<f64> = (0..3).map(|k2| u.matrix[[k2, 1]].norm_sqr()).collect();
        assert!(reference[1] < 1e-20, "middle outcome is forbidden");

        let shots = 100_000;
        let mut counts = [0usize; 3];
        for rec in sample_counts(&joint, phi, shots, 21) {
            counts[rec.k2 as usize] += 1;
        }
        assert_eq!(counts[1], 0);
        for k2 in [0usize, 2] {
            let p_hat = counts[k2] as f64 / shots as f64;
            let sigma = (reference[k2] * (1.0 - reference[k2]) / shots as f64).sqrt();
            assert!(
                (p_hat - reference[k2]).abs() < 3.0 * sigma,
                "outcome {k2}: {p_hat} vs {}",
                reference[k2]
            );
        }
    }

    #[test]
    fn full_transfer_makes_signals_coincide() {
        // no donor particles remain at q = 1, so the two signals see the
        // same records and produce identical estimates
        let joint = joint_tf(10, 1.0);
        let rec = empirical_sensitivity(&joint, true, 0.1, 50, 100, 3).unwrap();
        let plain = empirical_sensitivity(&joint, false, 0.1, 50, 100, 3).unwrap();
        assert_eq!(rec.estimates, plain.estimates);
        assert!((rec.rmse / plain.rmse - 1.0).abs() < 0.1);
    }

    #[test]
    fn flat_signal_curve_is_rejected() {
        // the vacuum carries no phase information at all
        let joint = joint_tf(0, 0.5);
        let records = vec![MeasurementRecord { d1: 0, d2: 0, k1: 0, k2: 0 }];
        assert!(matches!(
            estimate_phase(&records, &joint, true),
            Err(Error::NonMonotone(_))
        ));
    }

    #[test]
    fn empirical_signal_mean_tracks_analytic_mean() {
        let joint = joint_tf(6, 0.8);
        let phi = 0.5;
        let shots = 20_000;
        let recs = sample_counts(&joint, phi, shots, 5);
        let profile = MomentProfile::new(&joint, SignalKind::Recycled);
        let mean = recs
            .iter()
            .map(|r| signal_from_record(r, true))
            .sum::<f64>()
            / shots as f64;
        let want = profile.mean_at(phi);
        let m = profile.moments_at(phi);
        let se = (m.variance / shots as f64).sqrt();
        assert!((mean - want).abs() < 4.0 * se, "{mean} vs {want} (se {se})");
    }

    #[test]
    fn inversion_identity() {
        let joint = joint_tf(8, 0.7);
        let profile = MomentProfile::new(&joint, SignalKind::Recycled);
        for phi_true in [0.1, 0.4, 1.0] {
            let est = invert_mean(&profile, profile.mean_at(phi_true)).unwrap();
            assert!(!est.clamped);
            assert!((est.phi - phi_true).abs() < 1e-10);
        }
    }

    #[test]
    fn out_of_range_targets_clamp() {
        let joint = joint_tf(4, 0.6);
        let profile = MomentProfile::new(&joint, SignalKind::Recycled);
        let above = profile.mean_at(std::f64::consts::FRAC_PI_2) + 1.0;
        let est = invert_mean(&profile, above).unwrap();
        assert!(est.clamped);
        assert!((est.phi - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn empty_records_error() {
        let joint = joint_tf(4, 0.6);
        assert!(matches!(
            estimate_phase(&[], &joint, true),
            Err(Error::NoRecords)
        ));
    }

    #[test]
    fn estimation_run_is_deterministic() {
        let joint = joint_tf(6, 0.8);
        let a = empirical_sensitivity(&joint, true, 0.1, 50, 20, 99).unwrap();
        let b = empirical_sensitivity(&joint, true, 0.1, 50, 20, 99).unwrap();
        assert_eq!(a.estimates, b.estimates);
        assert_eq!(a.rmse, b.rmse);
    }
}
