//! Two-mode Fock-sector operators.
//!
//! A sector collects all two-mode occupation states with a fixed total
//! `n_total`; row `r` of a sector matrix is the state `|n_total - r, r>`.
//! The pseudo-spin operators `J_k = (1/2) a^dag sigma_k a` are block diagonal
//! across sectors, so everything in this crate works one sector at a time.

use ndarray::Array2;
use num_complex::Complex64;

use crate::linalg;

/// An operator restricted to the two-mode sector with total occupation
/// `n_total`. Row `r` indexes the basis ket `|n_total - r, r>` (mode-2
/// occupation grows with the row index).
#[derive(Debug, Clone)]
pub struct SectorOperator {
    pub n_total: usize,
    pub matrix: Array2<Complex64>,
}

impl SectorOperator {
    pub fn dim(&self) -> usize {
        self.n_total + 1
    }

    /// `<row| M |col>` as a complex number.
    pub fn element(&self, row: usize, col: usize) -> Complex64 {
        self.matrix[[row, col]]
    }
}

/// Pseudo-spin operators `(J_x, J_y, J_z)` on the sector with total
/// occupation `n_total`.
///
/// With row `r` holding `|n_total - r, r>`:
/// `J_z` is diagonal with entries `(n_total - 2r)/2`, and
/// `J_x`, `J_y` are the usual tridiagonal ladder combinations built from
/// `a_1^dag a_2` and `a_2^dag a_1`. The empty sector returns 1x1 zeros.
pub fn build_spin_operators(n_total: usize) -> (SectorOperator, SectorOperator, SectorOperator) {
    let dim = n_total + 1;
    let mut jx = Array2::<Complex64>::zeros((dim, dim));
    let mut jy = Array2::<Complex64>::zeros((dim, dim));
    let mut jz = Array2::<Complex64>::zeros((dim, dim));
    for r in 0..dim {
        let n1 = (n_total - r) as f64;
        let n2 = r as f64;
        jz[[r, r]] = Complex64::new((n1 - n2) / 2.0, 0.0);
        // a1^dag a2 : |n1, n2> -> sqrt((n1+1) n2) |n1+1, n2-1>, row r -> r-1
        if r >= 1 {
            let amp = ((n1 + 1.0) * n2).sqrt();
            jx[[r - 1, r]] += Complex64::new(amp / 2.0, 0.0);
            jy[[r - 1, r]] += Complex64::new(0.0, -amp / 2.0);
        }
        // a2^dag a1 : |n1, n2> -> sqrt(n1 (n2+1)) |n1-1, n2+1>, row r -> r+1
        if r + 1 < dim {
            let amp = (n1 * (n2 + 1.0)).sqrt();
            jx[[r + 1, r]] += Complex64::new(amp / 2.0, 0.0);
            jy[[r + 1, r]] += Complex64::new(0.0, amp / 2.0);
        }
    }
    (
        SectorOperator { n_total, matrix: jx },
        SectorOperator { n_total, matrix: jy },
        SectorOperator { n_total, matrix: jz },
    )
}

/// Mach-Zehnder rotation `U(phi) = exp(-i phi J_y)` on one sector.
///
/// Conjugation satisfies `U^dag J_z U = J_z cos(phi) - J_x sin(phi)`, i.e.
/// the interferometer rotates the pseudo-spin about the y axis.
pub fn mz_rotation(n_total: usize, phi: f64) -> SectorOperator {
    let (_, jy, _) = build_spin_operators(n_total);
    let gen = jy.matrix.mapv(|z| Complex64::new(0.0, -phi) * z);
    SectorOperator {
        n_total,
        matrix: linalg::expm(&gen),
    }
}
