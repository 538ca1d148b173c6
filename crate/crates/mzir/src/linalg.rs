//! Small dense complex-matrix toolbox: adjoints, matrix exponential, and a
//! cyclic Jacobi eigensolver for Hermitian matrices.
//!
//! Everything here works on `ndarray::Array2<Complex64>` at desk scale
//! (dimensions up to a few hundred), which is all the sector algebra needs.

use ndarray::Array2;
use num_complex::Complex64;

pub fn identity(dim: usize) -> Array2<Complex64> {
    Array2::from_diag_elem(dim, Complex64::new(1.0, 0.0))
}

pub fn adjoint(a: &Array2<Complex64>) -> Array2<Complex64> {
    a.t().mapv(|z| z.conj())
}

/// Largest entrywise deviation from Hermiticity.
pub fn hermiticity_defect(a: &Array2<Complex64>) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((a[[i, j]] - a[[j, i]].conj()).norm());
        }
    }
    worst
}

/// Frobenius norm.
pub fn fro_norm(a: &Array2<Complex64>) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Max-column-sum (induced 1-) norm, used to pick the exponential scaling.
fn one_norm(a: &Array2<Complex64>) -> f64 {
    let mut worst = 0.0f64;
    for j in 0..a.ncols() {
        let s: f64 = a.column(j).iter().map(|z| z.norm()).sum();
        worst = worst.max(s);
    }
    worst
}

/// Matrix exponential by scaling-and-squaring with a Taylor core.
///
/// The argument is scaled to 1-norm below 1/4, the series is summed to
/// machine precision, and the result squared back up.
pub fn expm(a: &Array2<Complex64>) -> Array2<Complex64> {
    let dim = a.nrows();
    assert_eq!(dim, a.ncols(), "expm needs a square matrix");
    let norm = one_norm(a);
    let squarings = if norm > 0.25 {
        (norm / 0.25).log2().ceil() as u32
    } else {
        0
    };
    let scale = 2.0f64.powi(squarings as i32);
    let b = a.mapv(|z| z / scale);

    let mut result = identity(dim);
    let mut term = identity(dim);
    for k in 1..=40u32 {
        term = term.dot(&b).mapv(|z| z / k as f64);
        result += &term;
        if fro_norm(&term) < 1e-18 * fro_norm(&result) {
            break;
        }
    }
    for _ in 0..squarings {
        result = result.dot(&result);
    }
    result
}

/// Eigenvalues of a Hermitian matrix, ascending, by cyclic Jacobi rotations.
///
/// The input is symmetrized first so that tiny Hermiticity defects from
/// rounding do not derail the iteration; callers that care validate
/// Hermiticity separately.
pub fn eigvalsh(a: &Array2<Complex64>) -> Vec<f64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "eigvalsh needs a square matrix");
    if n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return vec![a[[0, 0]].re];
    }
    let mut m = Array2::<Complex64>::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            m[[i, j]] = 0.5 * (a[[i, j]] + a[[j, i]].conj());
        }
    }

    let scale = fro_norm(&m).max(1.0);
    let tol = 1e-15 * scale;
    for _sweep in 0..60 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(m[[p, q]].norm());
            }
        }
        if off < tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[[p, q]];
                let abs_apq = apq.norm();
                if abs_apq <= tol * 1e-2 {
                    continue;
                }
                let app = m[[p, p]].re;
                let aqq = m[[q, q]].re;
                let phase = apq / abs_apq;
                let tau = (aqq - app) / (2.0 * abs_apq);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // G = [[c, s*phase], [-s*conj(phase), c]] on the (p,q) plane
                for k in 0..n {
                    let mkp = m[[k, p]];
                    let mkq = m[[k, q]];
                    m[[k, p]] = c * mkp - s * phase.conj() * mkq;
                    m[[k, q]] = s * phase * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[[p, k]];
                    let mqk = m[[q, k]];
                    m[[p, k]] = c * mpk - s * phase * mqk;
                    m[[q, k]] = s * phase.conj() * mpk + c * mqk;
                }
            }
        }
    }
    let mut eigs: Vec<f64> = (0..n).map(|i| m[[i, i]].re).collect();
    eigs.sort_by(|x, y| x.partial_cmp(y).unwrap());
    eigs
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigval(a: &Array2<Complex64>) -> f64 {
    eigvalsh(a).first().copied().unwrap_or(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn expm_of_zero_is_identity() {
        let z = Array2::<Complex64>::zeros((3, 3));
        let e = expm(&z);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((e[[i, j]] - c(want, 0.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn expm_matches_scalar_rotation() {
        // exp(i theta sigma_y) on 2x2: [[cos, sin], [-sin, cos]]
        let theta = 0.7;
        let mut a = Array2::<Complex64>::zeros((2, 2));
        a[[0, 1]] = c(theta, 0.0);
        a[[1, 0]] = c(-theta, 0.0);
        let e = expm(&a);
        assert!((e[[0, 0]].re - theta.cos()).abs() < 1e-14);
        assert!((e[[0, 1]].re - theta.sin()).abs() < 1e-14);
        assert!((e[[1, 0]].re + theta.sin()).abs() < 1e-14);
    }

    #[test]
    fn jacobi_recovers_known_spectrum() {
        // Hermitian 3x3 with a complex off-diagonal pattern; spectrum checked
        // against the characteristic polynomial evaluated at the results.
        let mut a = Array2::<Complex64>::zeros((3, 3));
        a[[0, 0]] = c(2.0, 0.0);
        a[[1, 1]] = c(-1.0, 0.0);
        a[[2, 2]] = c(0.5, 0.0);
        a[[0, 1]] = c(1.0, 0.5);
        a[[1, 0]] = c(1.0, -0.5);
        a[[1, 2]] = c(0.0, -2.0);
        a[[2, 1]] = c(0.0, 2.0);
        let eigs = eigvalsh(&a);
        let trace: f64 = eigs.iter().sum();
        assert!((trace - 1.5).abs() < 1e-12);
        // sum of squares = ||A||_F^2 for Hermitian A
        let sq: f64 = eigs.iter().map(|x| x * x).sum();
        assert!((sq - fro_norm(&a).powi(2)).abs() < 1e-10);
        assert!(eigs.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn jacobi_handles_psd_rank_one() {
        let v = [c(0.6, 0.0), c(0.0, 0.8)];
        let mut a = Array2::<Complex64>::zeros((2, 2));
        for i in 0..2 {
            for j in 0..2 {
                a[[i, j]] = v[i] * v[j].conj();
            }
        }
        let eigs = eigvalsh(&a);
        assert!(eigs[0].abs() < 1e-14);
        assert!((eigs[1] - 1.0).abs() < 1e-14);
    }
}
