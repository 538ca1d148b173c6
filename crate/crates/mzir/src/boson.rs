//! Build-time symbolic expansion of the signal operators.
//!
//! The measured signals are polynomials in the acceptor pseudo-spin
//! components `J_z`, `J_x` (the donor `L_z` converts to `-J_z` against the
//! number-correlated state, applied from the right). Expectation values on
//! the product-sector state reduce to polynomials in the per-sector
//! conditional moments `mu_k = <n^k>_N`, because
//!
//! * only normal-ordered monomials with matching creation/annihilation
//!   counts per mode survive (number conservation sector by sector), and
//! * the two branches are independent and identical within a sector, so the
//!   surviving falling-factorial factors take expectation values separately.
//!
//! This module carries out that reduction mechanically: operators are sparse
//! normal-ordered polynomials over the two acceptor modes, with coefficients
//! that are polynomials in `cos(phi)` and `sin(phi)`. The result is a small
//! table mapping trig monomials to quadratic forms in `(1, mu_1..mu_4)`,
//! evaluated per sector at runtime. Deriving the tables here, instead of
//! transcribing printed formulas, is what the brute-force oracle certifies.

use std::collections::BTreeMap;
use std::sync::OnceLock;

/// Polynomial in cos(phi), sin(phi): map (cos power, sin power) -> coeff.
type TrigPoly = BTreeMap<(u8, u8), f64>;

/// Normal-ordered boson polynomial: monomial exponents
/// `(a1^dag, a1, a2^dag, a2)` -> trig-polynomial coefficient.
type Operator = BTreeMap<(u8, u8, u8, u8), TrigPoly>;

/// Quadratic form in the conditional moments; index 0 is the constant 1,
/// indices 1..=4 are `mu_1..mu_4`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectorPoly(pub [[f64; 5]; 5]);

impl SectorPoly {
    fn zero() -> Self {
        SectorPoly([[0.0; 5]; 5])
    }

    /// Evaluate at `mu = [1, mu1, mu2, mu3, mu4]`.
    pub fn eval(&self, mu: &[f64; 5]) -> f64 {
        let mut acc = 0.0;
        for (i, row) in self.0.iter().enumerate() {
            for (j, c) in row.iter().enumerate() {
                if *c != 0.0 {
                    acc += c * mu[i] * mu[j];
                }
            }
        }
        acc
    }
}

/// Expectation table for one scalar: a sum of trig monomials, each weighted
/// by a per-sector moment polynomial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigTable(pub Vec<(u8, u8, SectorPoly)>);

impl TrigTable {
    pub fn eval(&self, mu: &[f64; 5], phi: f64) -> f64 {
        let (c, s) = (phi.cos(), phi.sin());
        self.0
            .iter()
            .map(|(a, b, p)| c.powi(*a as i32) * s.powi(*b as i32) * p.eval(mu))
            .sum()
    }
}

fn trig_mul(t1: &TrigPoly, t2: &TrigPoly) -> TrigPoly {
    let mut out = TrigPoly::new();
    for ((a1, b1), v1) in t1 {
        for ((a2, b2), v2) in t2 {
            *out.entry((a1 + a2, b1 + b2)).or_insert(0.0) += v1 * v2;
        }
    }
    out.retain(|_, v| *v != 0.0);
    out
}

fn op_add_scaled(target: &mut Operator, other: &Operator, scale: f64) {
    for (mono, t) in other {
        let entry = target.entry(*mono).or_default();
        for (k, v) in t {
            *entry.entry(*k).or_insert(0.0) += scale * v;
        }
    }
    target.retain(|_, t| {
        t.retain(|_, v| *v != 0.0);
        !t.is_empty()
    });
}

fn binom(n: u8, k: u8) -> f64 {
    let (n, k) = (n as u64, k as u64);
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

fn factorial(n: u8) -> f64 {
    (1..=n as u64).map(|k| k as f64).product()
}

/// Product of two normal-ordered polynomials, re-normal-ordered with
/// `a^q adag^p = sum_j C(q,j) C(p,j) j! adag^{p-j} a^{q-j}` per mode.
fn op_mul(o1: &Operator, o2: &Operator) -> Operator {
    let mut out = Operator::new();
    for ((p1, q1, r1, s1), t1) in o1 {
        for ((p2, q2, r2, s2), t2) in o2 {
            let t = trig_mul(t1, t2);
            for j in 0..=*q1.min(p2) {
                let cj = binom(*q1, j) * binom(*p2, j) * factorial(j);
                for l in 0..=*s1.min(r2) {
                    let cl = binom(*s1, l) * binom(*r2, l) * factorial(l);
                    let mono = (p1 + p2 - j, q1 + q2 - j, r1 + r2 - l, s1 + s2 - l);
                    let entry = out.entry(mono).or_default();
                    for (k, v) in &t {
                        *entry.entry(*k).or_insert(0.0) += cj * cl * v;
                    }
                }
            }
        }
    }
    out.retain(|_, t| {
        t.retain(|_, v| *v != 0.0);
        !t.is_empty()
    });
    out
}

/// Falling-factorial operators `adag^k a^k` expanded over plain moments:
/// `FF_k(n) = sum_j STIRLING[k][j] n^j`.
const FF: [[f64; 5]; 5] = [
    [1.0, 0.0, 0.0, 0.0, 0.0],
    [0.0, 1.0, 0.0, 0.0, 0.0],
    [0.0, -1.0, 1.0, 0.0, 0.0],
    [0.0, 2.0, -3.0, 1.0, 0.0],
    [0.0, -6.0, 11.0, -6.0, 1.0],
];

/// Take the sector expectation value of an operator polynomial.
///
/// Monomials with unmatched ladder counts on either mode drop; survivors
/// `adag^k a^k adag'^l a'^l` factorize into `FF_k(mu) FF_l(mu)`.
fn op_expect(o: &Operator) -> TrigTable {
    let mut table: BTreeMap<(u8, u8), SectorPoly> = BTreeMap::new();
    for ((p, q, r, s), t) in o {
        if p != q || r != s {
            continue;
        }
        for (i, ci) in FF[*p as usize].iter().enumerate() {
            if *ci == 0.0 {
                continue;
            }
            for (j, cj) in FF[*r as usize].iter().enumerate() {
                if *cj == 0.0 {
                    continue;
                }
                for (key, v) in t {
                    let entry = table.entry(*key).or_insert_with(SectorPoly::zero);
                    entry.0[i][j] += v * ci * cj;
                }
            }
        }
    }
    TrigTable(table.into_iter().map(|((a, b), p)| (a, b, p)).collect())
}

fn jz() -> Operator {
    let mut o = Operator::new();
    o.insert((1, 1, 0, 0), TrigPoly::from([((0, 0), 0.5)]));
    o.insert((0, 0, 1, 1), TrigPoly::from([((0, 0), -0.5)]));
    o
}

fn jx() -> Operator {
    let mut o = Operator::new();
    o.insert((1, 0, 0, 1), TrigPoly::from([((0, 0), 0.5)]));
    o.insert((0, 1, 1, 0), TrigPoly::from([((0, 0), 0.5)]));
    o
}

/// Heisenberg-picture `J_z(t_f) = J_z cos(phi) - J_x sin(phi)`.
fn jz_rotated() -> Operator {
    let mut o = Operator::new();
    for (mono, t) in jz() {
        o.insert(mono, TrigPoly::from([((1, 0), t[&(0, 0)])]));
    }
    for (mono, t) in jx() {
        o.insert(mono, TrigPoly::from([((0, 1), -t[&(0, 0)])]));
    }
    o
}

/// Everything the runtime moment engine needs, derived once.
#[derive(Debug, Clone)]
pub struct MomentTables {
    /// `<S>` and `<S^2>` for the recycled signal `(J_z(t_f) + L_z)^2`.
    pub recycled_mean: TrigTable,
    pub recycled_second: TrigTable,
    /// `<S>` and `<S^2>` for the plain signal `J_z(t_f)^2`.
    pub plain_mean: TrigTable,
    pub plain_second: TrigTable,
    /// Static (phi-independent) moments feeding the plain optimal-point
    /// sensitivity formula.
    pub jz2: SectorPoly,
    pub jx2: SectorPoly,
    pub jz4: SectorPoly,
    pub jx4: SectorPoly,
    /// `<Jz^2 Jx^2 + Jx^2 Jz^2>`.
    pub zx_sum: SectorPoly,
    /// `<(Jx Jz + Jz Jx)^2>`.
    pub anti_sq: SectorPoly,
}

fn static_poly(o: &Operator) -> SectorPoly {
    let table = op_expect(o);
    let mut out = SectorPoly::zero();
    for (a, b, p) in table.0 {
        assert_eq!((a, b), (0, 0), "static operator produced trig terms");
        for i in 0..5 {
            for j in 0..5 {
                out.0[i][j] += p.0[i][j];
            }
        }
    }
    out
}

fn build_tables() -> MomentTables {
    let jz_op = jz();
    let jx_op = jx();
    let a = jz_rotated();
    let a2 = op_mul(&a, &a);
    let a3 = op_mul(&a2, &a);
    let a4 = op_mul(&a3, &a);

    let jz2_op = op_mul(&jz_op, &jz_op);
    let jz3_op = op_mul(&jz2_op, &jz_op);
    let jz4_op = op_mul(&jz3_op, &jz_op);

    // Recycled signal S = (J_z(t_f) + L_z)^2. L_z commutes with every
    // acceptor operator and satisfies L_z rho = -J_z rho on the
    // number-correlated state, so each power L_z^k becomes (-J_z)^k applied
    // from the right:
    //   <S>   = <A^2> - 2<A Jz> + <Jz^2>
    //   <S^2> = sum_k C(4,k) (-1)^k <A^{4-k} Jz^k>
    let mut rec_mean = Operator::new();
    op_add_scaled(&mut rec_mean, &a2, 1.0);
    op_add_scaled(&mut rec_mean, &op_mul(&a, &jz_op), -2.0);
    op_add_scaled(&mut rec_mean, &jz2_op, 1.0);

    let mut rec_second = Operator::new();
    op_add_scaled(&mut rec_second, &a4, 1.0);
    op_add_scaled(&mut rec_second, &op_mul(&a3, &jz_op), -4.0);
    op_add_scaled(&mut rec_second, &op_mul(&a2, &jz2_op), 6.0);
    op_add_scaled(&mut rec_second, &op_mul(&a, &jz3_op), -4.0);
    op_add_scaled(&mut rec_second, &jz4_op, 1.0);

    let jx2_op = op_mul(&jx_op, &jx_op);
    let jx4_op = op_mul(&jx2_op, &jx2_op);
    let mut zx = op_mul(&jz2_op, &jx2_op);
    op_add_scaled(&mut zx, &op_mul(&jx2_op, &jz2_op), 1.0);
    let mut anti = op_mul(&jx_op, &jz_op);
    op_add_scaled(&mut anti, &op_mul(&jz_op, &jx_op), 1.0);
    let anti_sq = op_mul(&anti, &anti);

    MomentTables {
        recycled_mean: op_expect(&rec_mean),
        recycled_second: op_expect(&rec_second),
        plain_mean: op_expect(&a2),
        plain_second: op_expect(&a4),
        jz2: static_poly(&jz2_op),
        jx2: static_poly(&jx2_op),
        jz4: static_poly(&jz4_op),
        jx4: static_poly(&jx4_op),
        zx_sum: static_poly(&zx),
        anti_sq: static_poly(&anti_sq),
    }
}

static TABLES: OnceLock<MomentTables> = OnceLock::new();

pub fn tables() -> &'static MomentTables {
    TABLES.get_or_init(build_tables)
}
