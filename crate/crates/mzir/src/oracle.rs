//! Brute-force four-mode reference computation.
//!
//! This module materializes the post-transfer state exactly as the branch
//! map dictates, coherences between occupation sectors included, on the
//! basis `|M - m1, m1, M - m2, m2>` (donor 1, acceptor 1, donor 2,
//! acceptor 2). Moments are then evaluated by rotating the acceptor modes
//! with real sector matrices and reading the four-port number distribution.
//! Nothing from the conditional-moment engine is reused, so agreement
//! between the two is a genuine cross-check; the engine drops cross-sector
//! blocks, the oracle carries them and shows they cannot contribute.
//!
//! Cost grows like the fourth power of the occupation cap, which is why the
//! cap is small and this lives in validation paths only.

use std::collections::HashMap;

use ndarray::Array2;
use num_complex::Complex64;

use crate::channel::BranchChannel;
use crate::donor::NumberCorrelatedState;
use crate::error::{Error, Result};
use crate::linalg;
use crate::moments::{SignalKind, SignalMoments};
use crate::sector::mz_rotation;

/// Largest per-mode occupation the oracle accepts.
pub const ORACLE_CAP: usize = 10;

/// Finite-difference step for oracle derivatives.
const FD_STEP: f64 = 1e-5;

/// One diagonal block of the four-mode state: both branch totals fixed.
/// The basis index is `m1 * (n_branch2 + 1) + m2` over
/// `|n_branch1 - m1, m1, n_branch2 - m2, m2>`.
#[derive(Debug, Clone)]
pub struct FourModeState {
    pub n_branch1: usize,
    pub n_branch2: usize,
    pub rho: Array2<Complex64>,
}

impl FourModeState {
    pub fn dim(&self) -> usize {
        (self.n_branch1 + 1) * (self.n_branch2 + 1)
    }

    /// Trace-one, Hermitian, PSD checks at the documented tolerances.
    pub fn validate(&self) -> Result<()> {
        let tr: f64 = (0..self.dim()).map(|i| self.rho[[i, i]].re).sum();
        if (tr - 1.0).abs() > 1e-12 {
            return Err(Error::BadTrace((tr - 1.0).abs()));
        }
        let defect = linalg::hermiticity_defect(&self.rho);
        if defect > 1e-12 {
            return Err(Error::NotHermitian(defect));
        }
        let eig = linalg::min_eigval(&self.rho);
        if eig < -1e-10 {
            return Err(Error::NotPsd(eig));
        }
        Ok(())
    }
}

/// Four-mode occupations `(d1, a1, d2, a2)`.
type Occ = [i64; 4];

/// The full post-transfer state: every block the branch map can populate,
/// including coherences between different occupation sectors.
#[derive(Debug, Clone)]
pub struct OracleState {
    n_max: usize,
    offsets: Vec<usize>,
    rho: Array2<Complex64>,
}

impl OracleState {
    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    fn index(&self, sector: usize, m1: usize, m2: usize) -> usize {
        self.offsets[sector] + m1 * (sector + 1) + m2
    }

    fn basis(&self) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::with_capacity(self.dim());
        for sector in 0..=self.n_max {
            for m1 in 0..=sector {
                for m2 in 0..=sector {
                    out.push((sector, m1, m2));
                }
            }
        }
        out
    }

    fn occ(sector: usize, m1: usize, m2: usize) -> Occ {
        [
            (sector - m1) as i64,
            m1 as i64,
            (sector - m2) as i64,
            m2 as i64,
        ]
    }

    fn index_of_occ(&self, occ: Occ) -> Option<usize> {
        if occ.iter().any(|&n| n < 0) {
            return None;
        }
        let t1 = (occ[0] + occ[1]) as usize;
        let t2 = (occ[2] + occ[3]) as usize;
        if t1 != t2 || t1 > self.n_max {
            return None;
        }
        Some(self.index(t1, occ[1] as usize, occ[3] as usize))
    }

    /// Trace over the stored support.
    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.rho[[i, i]].re).sum()
    }

    /// Normalized diagonal blocks with their weights, skipping empty ones.
    pub fn weighted_blocks(&self) -> Vec<(f64, FourModeState)> {
        let mut out = Vec::new();
        for sector in 0..=self.n_max {
            let dim = (sector + 1) * (sector + 1);
            let base = self.offsets[sector];
            let weight: f64 = (0..dim).map(|i| self.rho[[base + i, base + i]].re).sum();
            if weight <= 1e-15 {
                continue;
            }
            let mut block = Array2::<Complex64>::zeros((dim, dim));
            for i in 0..dim {
                for j in 0..dim {
                    block[[i, j]] = self.rho[[base + i, base + j]] / weight;
                }
            }
            out.push((
                weight,
                FourModeState {
                    n_branch1: sector,
                    n_branch2: sector,
                    rho: block,
                },
            ));
        }
        out
    }

    /// Frobenius norm of `(J_z + L_z) rho`: the anticorrelation witness.
    /// `J_z + L_z` is diagonal in the occupation basis, so each row of rho
    /// is scaled by the row's eigenvalue.
    pub fn anticorrelation_norm(&self) -> f64 {
        let basis = self.basis();
        let mut acc = 0.0;
        for (row, &(sector, m1, m2)) in basis.iter().enumerate() {
            let occ = Self::occ(sector, m1, m2);
            let eig = 0.5 * ((occ[1] - occ[3]) as f64 + (occ[0] - occ[2]) as f64);
            if eig == 0.0 {
                continue;
            }
            let row_sq: f64 = (0..self.dim())
                .map(|col| self.rho[[row, col]].norm_sqr())
                .sum();
            acc += eig * eig * row_sq;
        }
        acc.sqrt()
    }

    /// `tr(O rho)` for an operator given as a chain of elementary factors
    /// (applied rightmost first, like operator composition).
    pub fn expectation(&self, chain: &[OpAtom]) -> Complex64 {
        let basis = self.basis();
        let mut total = Complex64::new(0.0, 0.0);
        for (yi, &(sector, m1, m2)) in basis.iter().enumerate() {
            let mut components: Vec<(Occ, Complex64)> =
                vec![(Self::occ(sector, m1, m2), Complex64::new(1.0, 0.0))];
            for atom in chain.iter().rev() {
                let mut next = Vec::new();
                for (occ, amp) in components {
                    atom.apply(occ, amp, &mut next);
                }
                components = next;
            }
            for (occ, amp) in components {
                if let Some(zi) = self.index_of_occ(occ) {
                    total += amp * self.rho[[yi, zi]];
                }
            }
        }
        total
    }
}

/// Elementary pseudo-spin factors for oracle expectation values. The `y`
/// components carry their `1/(2i)` prefactors as complex amplitudes.
#[derive(Debug, Clone, Copy)]
pub enum OpAtom {
    /// Acceptor `J_x`.
    Jx,
    /// Acceptor `J_y`.
    Jy,
    /// Acceptor `J_z` (diagonal).
    Jz,
    /// Donor `L_y`.
    Ly,
    /// Donor `L_z` (diagonal).
    Lz,
}

impl OpAtom {
    fn apply(self, occ: Occ, amp: Complex64, out: &mut Vec<(Occ, Complex64)>) {
        let half = Complex64::new(0.5, 0.0);
        let half_over_i = Complex64::new(0.0, -0.5);
        match self {
            OpAtom::Jz => out.push((occ, amp * 0.5 * (occ[1] - occ[3]) as f64)),
            OpAtom::Lz => out.push((occ, amp * 0.5 * (occ[0] - occ[2]) as f64)),
            OpAtom::Jx | OpAtom::Jy => {
                let (raise, lower) = match self {
                    OpAtom::Jx => (half, half),
                    _ => (half_over_i, -half_over_i),
                };
                // a1^dag a2
                if occ[3] > 0 {
                    let f = (((occ[1] + 1) * occ[3]) as f64).sqrt();
                    out.push(([occ[0], occ[1] + 1, occ[2], occ[3] - 1], amp * raise * f));
                }
                // a2^dag a1
                if occ[1] > 0 {
                    let f = ((occ[1] * (occ[3] + 1)) as f64).sqrt();
                    out.push(([occ[0], occ[1] - 1, occ[2], occ[3] + 1], amp * lower * f));
                }
            }
            OpAtom::Ly => {
                // b1^dag b2
                if occ[2] > 0 {
                    let f = (((occ[0] + 1) * occ[2]) as f64).sqrt();
                    out.push(([occ[0] + 1, occ[1], occ[2] - 1, occ[3]], amp * half_over_i * f));
                }
                // b2^dag b1
                if occ[0] > 0 {
                    let f = ((occ[0] * (occ[2] + 1)) as f64).sqrt();
                    out.push(([occ[0] - 1, occ[1], occ[2] + 1, occ[3]], amp * -half_over_i * f));
                }
            }
        }
    }
}

/// Materialize the exact four-mode state produced by `channel` acting on
/// both branches of `donor`.
pub fn brute_force_joint_state(
    donor: &NumberCorrelatedState,
    channel: &BranchChannel,
    n_cap: usize,
) -> Result<OracleState> {
    if n_cap > ORACLE_CAP {
        return Err(Error::CapExceeded {
            requested: n_cap,
            cap: ORACLE_CAP,
        });
    }
    if donor.n_max() > n_cap {
        return Err(Error::CapExceeded {
            requested: donor.n_max(),
            cap: n_cap,
        });
    }
    if donor.n_max() > channel.n_max() {
        return Err(Error::TruncationMismatch {
            donor: donor.n_max(),
            channel: channel.n_max(),
        });
    }
    let n_max = donor.n_max();
    let mut offsets = Vec::with_capacity(n_max + 1);
    let mut dim = 0usize;
    for sector in 0..=n_max {
        offsets.push(dim);
        dim += (sector + 1) * (sector + 1);
    }
    let mut state = OracleState {
        n_max,
        offsets,
        rho: Array2::zeros((dim, dim)),
    };
    for big_m in 0..=n_max {
        for big_n in 0..=n_max {
            let w = donor.element(big_m, big_n);
            if w.norm() == 0.0 {
                continue;
            }
            for m1 in 0..=big_m {
                for n1 in 0..=big_n {
                    let a1 = channel.coefficient(big_m, m1, big_n, n1);
                    if a1.norm() == 0.0 {
                        continue;
                    }
                    for m2 in 0..=big_m {
                        for n2 in 0..=big_n {
                            let a2 = channel.coefficient(big_m, m2, big_n, n2);
                            if a2.norm() == 0.0 {
                                continue;
                            }
                            let row = state.index(big_m, m1, m2);
                            let col = state.index(big_n, n1, n2);
                            state.rho[[row, col]] += w * a1 * a2;
                        }
                    }
                }
            }
        }
    }
    Ok(state)
}

/// Four-port number distribution after rotating the acceptor modes by `phi`,
/// folded into the first two signal moments.
///
/// The rotation acts as the identity on donor modes and block-diagonally on
/// the acceptor total; both facts enter as structural checks on every pair
/// of stored matrix entries, so cross-sector coherences are carried through
/// the arithmetic and cancel there rather than by assumption.
fn distribution_moments(joint: &OracleState, phi: f64, recycled: bool) -> (f64, f64) {
    let mut rotations: HashMap<usize, Array2<Complex64>> = HashMap::new();
    let basis = joint.basis();
    let mut s1 = Complex64::new(0.0, 0.0);
    let mut s2 = Complex64::new(0.0, 0.0);
    for (xi, &(mx, m1, m2)) in basis.iter().enumerate() {
        for (yi, &(ny, n1, n2)) in basis.iter().enumerate() {
            let v = joint.rho[[xi, yi]];
            if v.norm() == 0.0 {
                continue;
            }
            // the rotation leaves donor occupations untouched, so the ket
            // and bra donor labels must already agree
            if mx - m1 != ny - n1 || mx - m2 != ny - n2 {
                continue;
            }
            // and it is block diagonal in the acceptor total
            let total = m1 + m2;
            if total != n1 + n2 {
                continue;
            }
            let u = rotations
                .entry(total)
                .or_insert_with(|| mz_rotation(total, phi).matrix);
            let d1 = (mx - m1) as f64;
            let d2 = (mx - m2) as f64;
            // sector row index is the mode-2 occupation
            for k2 in 0..=total {
                let k1 = (total - k2) as f64;
                let weight = u[[k2, m2]] * u[[k2, n2]].conj();
                let acc = 0.5 * (k1 - k2 as f64);
                let s = if recycled {
                    let rec = acc + 0.5 * (d1 - d2);
                    rec * rec
                } else {
                    acc * acc
                };
                let contrib = v * weight;
                s1 += contrib * s;
                s2 += contrib * s * s;
            }
        }
    }
    debug_assert!(s1.im.abs() < 1e-10 && s2.im.abs() < 1e-10);
    (s1.re, s2.re)
}

/// Exact signal moments from the materialized state, with the derivative of
/// the mean taken by central finite differences.
pub fn brute_force_moments(joint: &OracleState, phi: f64, recycled: bool) -> SignalMoments {
    let (mean, second) = distribution_moments(joint, phi, recycled);
    let (mean_p, _) = distribution_moments(joint, phi + FD_STEP, recycled);
    let (mean_m, _) = distribution_moments(joint, phi - FD_STEP, recycled);
    SignalMoments {
        mean,
        second,
        variance: second - mean * mean,
        dmean_dphi: (mean_p - mean_m) / (2.0 * FD_STEP),
        phi,
        signal_kind: if recycled {
            SignalKind::Recycled
        } else {
            SignalKind::Plain
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{apply, beamsplitter_channel, random_channel};
    use crate::donor::{custom_state, twin_fock};
    use crate::moments::{plain_moments, recycled_moments};
    use ndarray::Array2;

    #[test]
    fn cap_is_enforced() {
        let donor = twin_fock(4).unwrap();
        let ch = beamsplitter_channel(0.5, 2).unwrap();
        assert!(matches!(
            brute_force_joint_state(&donor, &ch, 11),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn perfect_transfer_twin_fock_is_a_basis_projector() {
        // |1,1> donor with full transfer becomes |0,1,0,1><0,1,0,1|
        let donor = twin_fock(2).unwrap();
        let ch = beamsplitter_channel(1.0, 1).unwrap();
        let st = brute_force_joint_state(&donor, &ch, 4).unwrap();
        let blocks = st.weighted_blocks();
        assert_eq!(blocks.len(), 1);
        let (w, block) = &blocks[0];
        assert!((w - 1.0).abs() < 1e-14);
        assert_eq!(block.n_branch1, 1);
        // in-block index m1*(T2+1)+m2 with m1=m2=1 -> 3
        for i in 0..block.dim() {
            for j in 0..block.dim() {
                let want = if i == 3 && j == 3 { 1.0 } else { 0.0 };
                assert!((block.rho[[i, j]].re - want).abs() < 1e-14);
                assert!(block.rho[[i, j]].im.abs() < 1e-14);
            }
        }
        block.validate().unwrap();
    }

    #[test]
    fn blocked_transfer_leaves_acceptors_in_vacuum() {
        let donor = twin_fock(2).unwrap();
        let ch = beamsplitter_channel(0.0, 1).unwrap();
        let st = brute_force_joint_state(&donor, &ch, 4).unwrap();
        let blocks = st.weighted_blocks();
        assert_eq!(blocks.len(), 1);
        let block = &blocks[0].1;
        // m1 = m2 = 0 -> index 0
        assert!((block.rho[[0, 0]].re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn half_transfer_marginal_is_binomial() {
        let donor = twin_fock(2).unwrap();
        let ch = beamsplitter_channel(0.5, 1).unwrap();
        let st = brute_force_joint_state(&donor, &ch, 4).unwrap();
        let block = &st.weighted_blocks()[0].1;
        // marginal P(m1) from the diagonal
        let mut p = [0.0f64; 2];
        for (m1, slot) in p.iter_mut().enumerate() {
            for m2 in 0..2 {
                *slot += block.rho[[m1 * 2 + m2, m1 * 2 + m2]].re;
            }
        }
        assert!((p[0] - 0.5).abs() < 1e-14);
        assert!((p[1] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn anticorrelation_holds_on_oracle_states() {
        let mut rho = Array2::<num_complex::Complex64>::zeros((3, 3));
        rho[[0, 0]] = num_complex::Complex64::new(0.3, 0.0);
        rho[[2, 2]] = num_complex::Complex64::new(0.7, 0.0);
        let donor = custom_state(rho).unwrap();
        for seed in 0..5u64 {
            let ch = random_channel(2, seed);
            let st = brute_force_joint_state(&donor, &ch, 4).unwrap();
            assert!(st.anticorrelation_norm() < 1e-12);
        }
    }

    #[test]
    fn odd_jx_moments_vanish() {
        let donor = twin_fock(4).unwrap();
        let ch = beamsplitter_channel(0.6, 2).unwrap();
        let st = brute_force_joint_state(&donor, &ch, 4).unwrap();
        let jx = st.expectation(&[OpAtom::Jx]);
        let jx3 = st.expectation(&[OpAtom::Jx, OpAtom::Jx, OpAtom::Jx]);
        let jxzz = st.expectation(&[OpAtom::Jx, OpAtom::Jz, OpAtom::Jz]);
        assert!(jx.norm() < 1e-12);
        assert!(jx3.norm() < 1e-12);
        assert!(jxzz.norm() < 1e-12);
    }

    #[test]
    fn oracle_agrees_with_engine_reference_case() {
        let donor = twin_fock(8).unwrap();
        let ch = beamsplitter_channel(0.7, 4).unwrap();
        let st = brute_force_joint_state(&donor, &ch, 4).unwrap();
        let joint = apply(&ch, &donor).unwrap();
        let phi = 0.3;
        let rec_o = brute_force_moments(&st, phi, true);
        let rec_e = recycled_moments(&joint, phi);
        assert!((rec_o.mean - rec_e.mean).abs() < 1e-10);
        assert!((rec_o.second - rec_e.second).abs() < 1e-10);
        assert!(((rec_o.dmean_dphi - rec_e.dmean_dphi) / rec_e.dmean_dphi).abs() < 1e-6);
        let plain_o = brute_force_moments(&st, phi, false);
        let plain_e = plain_moments(&joint, phi);
        assert!((plain_o.mean - plain_e.mean).abs() < 1e-10);
        assert!((plain_o.second - plain_e.second).abs() < 1e-10);
    }

    #[test]
    fn oracle_blocks_are_physical() {
        let donor = twin_fock(6).unwrap();
        let ch = random_channel(3, 42);
        let st = brute_force_joint_state(&donor, &ch, 4).unwrap();
        assert!((st.trace() - 1.0).abs() < 1e-12);
        for (_, block) in st.weighted_blocks() {
            block.validate().unwrap();
        }
    }

    #[test]
    fn fisher_information_matches_generator_variance_on_full_state() {
        // independent Fisher-information route: 4 Var(J_y) evaluated on the
        // materialized four-mode matrix, coherent blocks and all
        use crate::closed_form::{qfi_pure_numeric, Side};
        let donor = twin_fock(6).unwrap();
        for q in [0.4, 0.85] {
            let ch = beamsplitter_channel(q, donor.n_max()).unwrap();
            let st = brute_force_joint_state(&donor, &ch, 4).unwrap();
            let jy = st.expectation(&[OpAtom::Jy]);
            let jy2 = st.expectation(&[OpAtom::Jy, OpAtom::Jy]);
            assert!(jy.norm() < 1e-12);
            let oracle_f = 4.0 * (jy2.re - jy.re * jy.re);
            let joint = apply(&ch, &donor).unwrap();
            let fast = qfi_pure_numeric(&joint, Side::Acceptor).unwrap();
            assert!((oracle_f - fast).abs() < 1e-10, "q = {q}: {oracle_f} vs {fast}");
            // donor side through L_y
            let ly2 = st.expectation(&[OpAtom::Ly, OpAtom::Ly]);
            let donor_f = qfi_pure_numeric(&joint, Side::Donor).unwrap();
            assert!((4.0 * ly2.re - donor_f).abs() < 1e-10);
        }
    }

    #[test]
    fn acceptor_means_agree_between_routes() {
        // conditional-expectation bookkeeping vs direct diagonal sums over
        // the materialized state, and both branches read the same
        let donor = twin_fock(6).unwrap();
        for seed in 0..5u64 {
            let ch = random_channel(3, seed);
            let joint = apply(&ch, &donor).unwrap();
            let st = brute_force_joint_state(&donor, &ch, 4).unwrap();
            let mut mean1 = 0.0;
            let mut mean2 = 0.0;
            for (w, block) in st.weighted_blocks() {
                let t2 = block.n_branch2;
                for m1 in 0..=block.n_branch1 {
                    for m2 in 0..=t2 {
                        let p = block.rho[[m1 * (t2 + 1) + m2, m1 * (t2 + 1) + m2]].re;
                        mean1 += w * p * m1 as f64;
                        mean2 += w * p * m2 as f64;
                    }
                }
            }
            assert!((mean1 - mean2).abs() < 1e-12, "branch asymmetry");
            assert!((mean1 + mean2 - joint.mean_acceptor_number()).abs() < 1e-12);
        }
    }
}
