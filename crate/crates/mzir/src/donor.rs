//! Number-correlated donor states.
//!
//! All donor states live on the span of `|M, M>` kets: both donor modes hold
//! the same occupation. The density matrix entry `rho[M][N]` is the
//! coefficient of `|M, M><N, N|`, so **the index is the per-mode occupation
//! and the total particle number at index `M` is `2M`**. Keeping that factor
//! of two straight is the single easiest way to avoid wrong moments, and the
//! serialized form uses the same per-mode convention.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg;

/// Hard cap on the squeezed-state truncation order.
pub const SQUEEZED_NMAX_CAP: usize = 4096;

/// How the state was built; carried along for serialization and so that
/// truncated squeezed states can correct their moments analytically.
#[derive(Debug, Clone, PartialEq)]
pub enum StateKind {
    TwinFock { n_total: u64 },
    Squeezed { r: f64, theta: f64, tail_tol: f64 },
    Custom,
}

/// Geometric continuation of the occupation distribution beyond `n_max`.
/// Only squeezed states have one; it makes truncated moments exact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Tail {
    None,
    Geometric { ratio: f64 },
}

/// A donor density matrix over `|M, M><N, N|`, with truncation bookkeeping.
#[derive(Debug, Clone)]
pub struct NumberCorrelatedState {
    rho: Array2<Complex64>,
    tail_mass: f64,
    tail: Tail,
    kind: StateKind,
}

impl NumberCorrelatedState {
    /// Highest per-mode occupation stored (matrix dimension minus one).
    pub fn n_max(&self) -> usize {
        self.rho.nrows() - 1
    }

    /// Probability weight discarded by truncation; zero for exact states.
    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    pub fn kind(&self) -> &StateKind {
        &self.kind
    }

    pub fn rho(&self) -> &Array2<Complex64> {
        &self.rho
    }

    pub fn element(&self, m: usize, n: usize) -> Complex64 {
        self.rho[[m, n]]
    }

    /// Sector weights `p_N = rho[N][N]`. These sum to `1 - tail_mass`.
    pub fn probabilities(&self) -> Vec<f64> {
        (0..=self.n_max()).map(|n| self.rho[[n, n]].re).collect()
    }

    /// True when the stored matrix is rank one (trace purity test).
    pub fn is_pure(&self) -> bool {
        let tr: f64 = (0..=self.n_max()).map(|n| self.rho[[n, n]].re).sum();
        let tr_sq: f64 = self.rho.iter().map(|z| z.norm_sqr()).sum();
        (tr_sq - tr * tr).abs() <= 1e-10 * tr.max(1e-300).powi(2)
    }

    pub(crate) fn tail(&self) -> Tail {
        self.tail
    }

    /// Rebuild a state from raw parts (deserialization path); runs the same
    /// validation as [`custom_state`] but keeps the original kind tag.
    pub(crate) fn from_parts(
        rho: Array2<Complex64>,
        tail_mass: f64,
        kind: StateKind,
    ) -> Result<Self> {
        let tail = match &kind {
            StateKind::Squeezed { r, .. } => Tail::Geometric { ratio: r.abs().tanh().powi(2) },
            _ => Tail::None,
        };
        let state = Self { rho, tail_mass, tail, kind };
        state.validate_matrix()?;
        Ok(state)
    }

    fn validate_matrix(&self) -> Result<()> {
        let defect = linalg::hermiticity_defect(&self.rho);
        if defect > 1e-12 {
            return Err(Error::NotHermitian(defect));
        }
        let trace: f64 = self.probabilities().iter().sum();
        let err = (trace + self.tail_mass - 1.0).abs();
        if err > 1e-9 {
            return Err(Error::BadTrace(err));
        }
        let min_eig = linalg::min_eigval(&self.rho);
        if min_eig < -1e-10 {
            return Err(Error::NotPsd(min_eig));
        }
        Ok(())
    }
}

/// Twin-Fock donor `|N/2, N/2>` for an even total `n_total`.
pub fn twin_fock(n_total: u64) -> Result<NumberCorrelatedState> {
    if !n_total.is_multiple_of(2) {
        return Err(Error::OddTotal(n_total));
    }
    let m = (n_total / 2) as usize;
    let mut rho = Array2::<Complex64>::zeros((m + 1, m + 1));
    rho[[m, m]] = Complex64::new(1.0, 0.0);
    Ok(NumberCorrelatedState {
        rho,
        tail_mass: 0.0,
        tail: Tail::None,
        kind: StateKind::TwinFock { n_total },
    })
}

/// Two-mode squeezed vacuum with squeezing magnitude `r_mag` and phase
/// `theta`, truncated at the smallest order whose discarded geometric tail
/// weighs at most `tail_tol`.
///
/// Amplitudes are `c_N = sech(r) (-e^{-i theta} tanh(r))^N`; the occupation
/// distribution is geometric with ratio `tanh(r)^2`, and the exact tail mass
/// `ratio^(n_max+1)` is kept so downstream moments can be corrected.
pub fn squeezed_vacuum(r_mag: f64, theta: f64, tail_tol: f64) -> Result<NumberCorrelatedState> {
    assert!(r_mag >= 0.0, "squeezing magnitude must be nonnegative");
    assert!(
        tail_tol > 0.0 && tail_tol < 1.0,
        "tail tolerance must lie in (0, 1)"
    );
    let lambda = r_mag.tanh().powi(2);
    let n_max = if lambda == 0.0 {
        0
    } else {
        // smallest n with lambda^(n+1) <= tail_tol
        let mut n = (tail_tol.ln() / lambda.ln()).ceil() as i64 - 1;
        if n < 0 {
            n = 0;
        }
        let mut n = n as usize;
        while lambda.powi(n as i32 + 1) > tail_tol {
            n += 1;
        }
        n
    };
    if n_max > SQUEEZED_NMAX_CAP {
        return Err(Error::TruncationOverflow {
            needed: n_max,
            cap: SQUEEZED_NMAX_CAP,
        });
    }
    let sech = 1.0 / r_mag.cosh();
    let tanh = r_mag.tanh();
    let c: Vec<Complex64> = (0..=n_max)
        .map(|n| {
            let mag = sech * tanh.powi(n as i32);
            let phase = Complex64::from_polar(1.0, -(n as f64) * theta);
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            sign * mag * phase
        })
        .collect();
    let mut rho = Array2::<Complex64>::zeros((n_max + 1, n_max + 1));
    for m in 0..=n_max {
        for n in 0..=n_max {
            rho[[m, n]] = c[m] * c[n].conj();
        }
    }
    let tail_mass = if lambda == 0.0 {
        0.0
    } else {
        ((n_max as f64 + 1.0) * lambda.ln()).exp()
    };
    Ok(NumberCorrelatedState {
        rho,
        tail_mass,
        tail: Tail::Geometric { ratio: lambda },
        kind: StateKind::Squeezed {
            r: r_mag,
            theta,
            tail_tol,
        },
    })
}

/// Squeezing magnitude that gives mean total particle number `n_t`.
///
/// `<N_t> = 2 sinh(r)^2`, so `r = asinh(sqrt(n_t / 2))`.
pub fn squeezing_for_mean(n_t: f64) -> f64 {
    (n_t / 2.0).sqrt().asinh()
}

/// Validate an arbitrary Hermitian matrix as a number-correlated state.
pub fn custom_state(rho: Array2<Complex64>) -> Result<NumberCorrelatedState> {
    assert_eq!(rho.nrows(), rho.ncols(), "state matrix must be square");
    let state = NumberCorrelatedState {
        rho,
        tail_mass: 0.0,
        tail: Tail::None,
        kind: StateKind::Custom,
    };
    state.validate_matrix()?;
    Ok(state)
}

/// `<N_t^k>` for `k` in 1..=4, including the analytic geometric-tail
/// correction for truncated squeezed states.
///
/// The stored sum is `sum_M p_M (2M)^k`; the tail adds
/// `sum_{M > n_max} (1 - ratio) ratio^M (2M)^k`, accumulated term by term
/// until it converges (the series is geometric, so this is exact at double
/// precision).
pub fn nt_moments(state: &NumberCorrelatedState, k: u32) -> f64 {
    assert!((1..=4).contains(&k), "moment order must be 1..=4");
    let body: f64 = state
        .probabilities()
        .iter()
        .enumerate()
        .map(|(m, p)| p * (2.0 * m as f64).powi(k as i32))
        .sum();
    let tail = match state.tail() {
        Tail::None => 0.0,
        Tail::Geometric { ratio: 0.0 } => 0.0,
        Tail::Geometric { ratio } => {
            let mut sum = 0.0;
            let mut m = state.n_max() as u64 + 1;
            // (1 - ratio) ratio^m starting weight, advanced multiplicatively
            let mut weight = (1.0 - ratio) * ((m as f64) * ratio.ln()).exp();
            loop {
                let term = weight * (2.0 * m as f64).powi(k as i32);
                sum += term;
                if term < 1e-18 * (body.abs() + sum.abs() + 1e-300) {
                    break;
                }
                weight *= ratio;
                m += 1;
            }
            sum
        }
    };
    body + tail
}

/// Variance of the total particle number, tail-corrected like [`nt_moments`].
pub fn nt_variance(state: &NumberCorrelatedState) -> f64 {
    let m1 = nt_moments(state, 1);
    nt_moments(state, 2) - m1 * m1
}
