//! Number-conserving per-branch transfer channels and the product-sector
//! joint state they produce.
//!
//! A branch channel is the map `|M,0><N,0| -> sum A_{Mm,Nn} |M-m,m><N-n,n|`
//! acting identically and independently on each branch. The part every
//! downstream computation consumes is the family of branch output states
//! `sigma^(N)_{mn} = A_{Nm,Nn}` (one per input occupation `N`) and their
//! diagonals `P(n|N)`, the conditional probability of finding `n` particles
//! in an acceptor mode given `N` in the donor mode.
//!
//! Cross-sector coefficients (`M != N`) never influence particle-number
//! observables; they are kept only where cheap (factorized beamsplitter
//! amplitudes, explicit tensors) so the brute-force oracle can include them
//! and demonstrate exactly that.

use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::donor::{nt_moments, nt_variance, NumberCorrelatedState};
use crate::error::{Error, Result};
use crate::linalg;

/// One branch-sector output state, stored in whichever form is exact for the
/// construction that produced it.
#[derive(Debug, Clone)]
pub enum SectorDensity {
    /// Rank one, `sigma = v v^dag` (unitary channels).
    Pure(Vec<Complex64>),
    /// Coherence-free, `sigma = diag(p)` (dephased channels).
    Diagonal(Vec<f64>),
    /// General density matrix.
    Dense(Array2<Complex64>),
}

impl SectorDensity {
    pub fn dim(&self) -> usize {
        match self {
            SectorDensity::Pure(v) => v.len(),
            SectorDensity::Diagonal(d) => d.len(),
            SectorDensity::Dense(m) => m.nrows(),
        }
    }

    /// Diagonal entry `P(n|N)`.
    pub fn prob(&self, n: usize) -> f64 {
        match self {
            SectorDensity::Pure(v) => v[n].norm_sqr(),
            SectorDensity::Diagonal(d) => d[n],
            SectorDensity::Dense(m) => m[[n, n]].re,
        }
    }

    /// The full conditional distribution over `0..dim`.
    pub fn probs(&self) -> Vec<f64> {
        (0..self.dim()).map(|n| self.prob(n)).collect()
    }

    pub fn element(&self, m: usize, n: usize) -> Complex64 {
        match self {
            SectorDensity::Pure(v) => v[m] * v[n].conj(),
            SectorDensity::Diagonal(d) => {
                if m == n {
                    Complex64::new(d[m], 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }
            SectorDensity::Dense(mat) => mat[[m, n]],
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|n| self.prob(n)).sum()
    }

    fn dephased(&self) -> SectorDensity {
        SectorDensity::Diagonal(self.probs())
    }

    /// Smallest eigenvalue; structural forms answer without diagonalizing.
    pub fn min_eigval(&self) -> f64 {
        match self {
            SectorDensity::Pure(_) => 0.0,
            SectorDensity::Diagonal(d) => d.iter().cloned().fold(0.0, f64::min),
            SectorDensity::Dense(m) => {
                if m.nrows() == 1 {
                    m[[0, 0]].re.min(0.0)
                } else {
                    linalg::min_eigval(m).min(0.0)
                }
            }
        }
    }
}

/// Construction tag; the beamsplitter case keeps its efficiency so that
/// closed-form cross-checks and Fisher-information reports can use it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChannelKind {
    Beamsplitter { q: f64 },
    Dephased,
    Custom,
}

/// Full branch tensor `A_{Mm,Nn}` for explicitly supplied channels, packed
/// over pairs `(M, m)` with `m <= M`. This is also, entry for entry, the
/// channel's sector-restricted Choi matrix: the output kets `|M-m, m>` are
/// distinct basis vectors, so complete positivity of the map is positive
/// semidefiniteness of this matrix.
#[derive(Debug, Clone)]
pub struct ATensor {
    n_max: usize,
    data: Vec<Complex64>,
}

impl ATensor {
    pub fn zeros(n_max: usize) -> Self {
        let t = Self::pairs(n_max);
        ATensor {
            n_max,
            data: vec![Complex64::new(0.0, 0.0); t * t],
        }
    }

    fn pairs(n_max: usize) -> usize {
        (n_max + 1) * (n_max + 2) / 2
    }

    fn flat(big: usize, small: usize) -> usize {
        big * (big + 1) / 2 + small
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn get(&self, m_sector: usize, m: usize, n_sector: usize, n: usize) -> Complex64 {
        let t = Self::pairs(self.n_max);
        self.data[Self::flat(m_sector, m) * t + Self::flat(n_sector, n)]
    }

    pub fn set(&mut self, m_sector: usize, m: usize, n_sector: usize, n: usize, value: Complex64) {
        let t = Self::pairs(self.n_max);
        self.data[Self::flat(m_sector, m) * t + Self::flat(n_sector, n)] = value;
    }

    /// The tensor viewed as a dense Choi matrix over `(sector, occupation)`
    /// pairs.
    fn choi_matrix(&self) -> Array2<Complex64> {
        let t = Self::pairs(self.n_max);
        Array2::from_shape_vec((t, t), self.data.clone()).expect("packed tensor is square")
    }
}

/// A validated per-branch transfer channel.
#[derive(Debug, Clone)]
pub struct BranchChannel {
    n_max: usize,
    kind: ChannelKind,
    sectors: Vec<SectorDensity>,
    full: Option<ATensor>,
}

impl BranchChannel {
    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn kind(&self) -> ChannelKind {
        self.kind
    }

    pub fn sector(&self, n: usize) -> &SectorDensity {
        &self.sectors[n]
    }

    /// `P(n|N)`.
    pub fn conditional_prob(&self, n_in: usize, n_out: usize) -> f64 {
        self.sectors[n_in].prob(n_out)
    }

    /// Cross-sector branch coefficient `A_{Mm,Nn}`, used by the brute-force
    /// oracle to materialize coherences between occupation sectors.
    pub fn coefficient(&self, m_sector: usize, m: usize, n_sector: usize, n: usize) -> Complex64 {
        if let Some(full) = &self.full {
            return full.get(m_sector, m, n_sector, n);
        }
        match (&self.kind, &self.sectors[m_sector]) {
            (ChannelKind::Beamsplitter { .. }, SectorDensity::Pure(vm)) => {
                if let SectorDensity::Pure(vn) = &self.sectors[n_sector] {
                    vm[m] * vn[n].conj()
                } else {
                    unreachable!("beamsplitter sectors are rank one")
                }
            }
            // No stored cross-sector information: the channel fully dephases
            // between sectors.
            _ => {
                if m_sector == n_sector {
                    self.sectors[m_sector].element(m, n)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }
        }
    }

    /// Re-run the physicality checks (per-sector normalization and
    /// positivity). Cheap for structural sector forms.
    pub fn validate(&self) -> Result<()> {
        for (n, sector) in self.sectors.iter().enumerate() {
            let sum = sector.trace();
            if (sum - 1.0).abs() > 1e-12 {
                return Err(Error::NotTracePreserving { sector: n, sum });
            }
            let eig = sector.min_eigval();
            if eig < -1e-10 {
                return Err(Error::NotPositive { sector: n, eig });
            }
            for m in 0..sector.dim() {
                let p = sector.prob(m);
                if !(-1e-14..=1.0 + 1e-14).contains(&p) {
                    return Err(Error::NotPositive { sector: n, eig: p });
                }
            }
        }
        Ok(())
    }
}

/// Beamsplitter transfer with efficiency `q` on sectors up to `n_max`.
///
/// Per-sector amplitudes are
/// `beta_{Nn} = (-i)^n sqrt(binom(N,n) q^n (1-q)^(N-n))`, giving the binomial
/// conditional distribution `P(n|N) = Binomial(N, q)`. The `(-i)^n` phase is
/// the beamsplitter convention; no particle-number observable depends on it.
pub fn beamsplitter_channel(q: f64, n_max: usize) -> Result<BranchChannel> {
    if !(0.0..=1.0).contains(&q) || !q.is_finite() {
        return Err(Error::BadEfficiency(q));
    }
    // ln k! table, compensated summation; log-space keeps binomials finite
    // at large n_max
    let mut ln_fact = vec![0.0f64; n_max + 1];
    let mut carry = 0.0f64;
    for k in 1..=n_max {
        let term = (k as f64).ln() + carry;
        let sum = ln_fact[k - 1] + term;
        carry = term - (sum - ln_fact[k - 1]);
        ln_fact[k] = sum;
    }
    let minus_i = Complex64::new(0.0, -1.0);
    let mut sectors = Vec::with_capacity(n_max + 1);
    for n_in in 0..=n_max {
        let mut v = vec![Complex64::new(0.0, 0.0); n_in + 1];
        for (n, item) in v.iter_mut().enumerate() {
            let mag = if q == 0.0 {
                if n == 0 {
                    1.0
                } else {
                    0.0
                }
            } else if q == 1.0 {
                if n == n_in {
                    1.0
                } else {
                    0.0
                }
            } else {
                let ln_p = ln_fact[n_in] - ln_fact[n] - ln_fact[n_in - n]
                    + n as f64 * q.ln()
                    + (n_in - n) as f64 * (1.0 - q).ln();
                (0.5 * ln_p).exp()
            };
            *item = minus_i.powu(n as u32) * mag;
        }
        // the binomial weights are normalized in exact arithmetic; divide
        // out the rounding residue so trace preservation holds per sector
        let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        v.iter_mut().for_each(|z| *z /= norm);
        sectors.push(SectorDensity::Pure(v));
    }
    Ok(BranchChannel {
        n_max,
        kind: ChannelKind::Beamsplitter { q },
        sectors,
        full: None,
    })
}

/// Remove every channel coherence, within and between sectors, keeping the
/// conditional distributions `P(n|N)` untouched. Idempotent.
pub fn dephase(channel: &BranchChannel) -> BranchChannel {
    BranchChannel {
        n_max: channel.n_max,
        kind: ChannelKind::Dephased,
        sectors: channel.sectors.iter().map(|s| s.dephased()).collect(),
        full: None,
    }
}

/// Validate an explicit branch tensor as a channel.
///
/// Always checks per-sector trace preservation and positivity of the branch
/// output states; `check_choi` additionally diagonalizes the packed tensor,
/// which is the channel's sector-restricted Choi matrix, and demands it be
/// PSD within 1e-9.
pub fn custom_channel(a_tensor: ATensor, check_choi: bool) -> Result<BranchChannel> {
    let n_max = a_tensor.n_max();
    let mut sectors = Vec::with_capacity(n_max + 1);
    for n_in in 0..=n_max {
        let dim = n_in + 1;
        let mut sigma = Array2::<Complex64>::zeros((dim, dim));
        for m in 0..dim {
            for n in 0..dim {
                sigma[[m, n]] = a_tensor.get(n_in, m, n_in, n);
            }
        }
        sectors.push(SectorDensity::Dense(sigma));
    }
    if check_choi {
        let eig = linalg::min_eigval(&a_tensor.choi_matrix());
        if eig < -1e-9 {
            return Err(Error::ChoiNotPsd(eig));
        }
    }
    let channel = BranchChannel {
        n_max,
        kind: ChannelKind::Custom,
        sectors,
        full: Some(a_tensor),
    };
    channel.validate()?;
    Ok(channel)
}

/// A random valid channel: each sector output is a random mixture of random
/// pure states, embedded with no cross-sector coherence. Deterministic in
/// `seed`; used for property tests.
pub fn random_channel(n_max: usize, seed: u64) -> BranchChannel {
    assert!(n_max >= 1, "random channels need at least one nonempty sector");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sectors = Vec::with_capacity(n_max + 1);
    for n_in in 0..=n_max {
        let dim = n_in + 1;
        let n_terms = rng.gen_range(1..=dim + 1);
        let mut weights: Vec<f64> = (0..n_terms)
            .map(|_| -(1.0 - rng.gen::<f64>()).ln())
            .collect();
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);

        let mut sigma = Array2::<Complex64>::zeros((dim, dim));
        for &w in &weights {
            let mut v: Vec<Complex64> = (0..dim)
                .map(|_| Complex64::new(gaussian(&mut rng), gaussian(&mut rng)))
                .collect();
            let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            v.iter_mut().for_each(|z| *z /= norm);
            for a in 0..dim {
                for b in 0..dim {
                    sigma[[a, b]] += w * v[a] * v[b].conj();
                }
            }
        }
        // exact unit trace regardless of rounding in the mixture sum
        let tr: f64 = (0..dim).map(|i| sigma[[i, i]].re).sum();
        sigma.mapv_inplace(|z| z / tr);
        sectors.push(if dim == 1 {
            SectorDensity::Diagonal(vec![1.0])
        } else {
            SectorDensity::Dense(sigma)
        });
    }
    BranchChannel {
        n_max,
        kind: ChannelKind::Custom,
        sectors,
        full: None,
    }
}

fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    // Box-Muller; avoids ln(0) by shifting the open interval
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

pub(crate) fn rebuild_channel(
    n_max: usize,
    kind: ChannelKind,
    sectors: Vec<SectorDensity>,
) -> BranchChannel {
    BranchChannel {
        n_max,
        kind,
        sectors,
        full: None,
    }
}

/// Facts about how a joint state was produced, kept so that reports can
/// attach the matching Fisher-information bound when one is known.
#[derive(Debug, Clone, Copy)]
pub struct Provenance {
    pub beamsplitter_q: Option<f64>,
    pub donor_pure: bool,
    pub donor_nt: f64,
    pub donor_v_nt: f64,
}

/// The four-mode state after transfer, in product-sector form: weights `p_N`
/// with one branch output `sigma^(N)` shared by both branches.
///
/// Coherences between different `N` sectors are deliberately not stored:
/// every observable this crate evaluates conserves particle number per
/// branch, so those blocks cannot contribute. The brute-force oracle keeps
/// them and confirms the reduction.
#[derive(Debug, Clone)]
pub struct JointSectorState {
    weights: Vec<f64>,
    sectors: Vec<SectorDensity>,
    tail_mass: f64,
    provenance: Provenance,
}

impl JointSectorState {
    pub fn n_max(&self) -> usize {
        self.weights.len() - 1
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn sector(&self, n: usize) -> &SectorDensity {
        &self.sectors[n]
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// Mean acceptor particle number `N_a = 2 sum_N p_N <n>_N`.
    pub fn mean_acceptor_number(&self) -> f64 {
        2.0 * self
            .weights
            .iter()
            .zip(&self.sectors)
            .map(|(p, s)| {
                p * s
                    .probs()
                    .iter()
                    .enumerate()
                    .map(|(n, q)| n as f64 * q)
                    .sum::<f64>()
            })
            .sum::<f64>()
    }
}

/// Push a donor state through a branch channel.
///
/// The joint weights are the donor sector probabilities and each sector
/// reuses the channel's branch output state; both branches share it by the
/// channel symmetry constraint.
pub fn apply(channel: &BranchChannel, donor: &NumberCorrelatedState) -> Result<JointSectorState> {
    if donor.n_max() > channel.n_max() {
        return Err(Error::TruncationMismatch {
            donor: donor.n_max(),
            channel: channel.n_max(),
        });
    }
    let weights = donor.probabilities();
    let sectors = (0..=donor.n_max())
        .map(|n| channel.sector(n).clone())
        .collect();
    let q = match channel.kind() {
        ChannelKind::Beamsplitter { q } => Some(q),
        _ => None,
    };
    Ok(JointSectorState {
        weights,
        sectors,
        tail_mass: donor.tail_mass(),
        provenance: Provenance {
            beamsplitter_q: q,
            donor_pure: donor.is_pure(),
            donor_nt: nt_moments(donor, 1),
            donor_v_nt: nt_variance(donor),
        },
    })
}
