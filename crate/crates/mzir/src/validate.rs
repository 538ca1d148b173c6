//! Fast self-test: oracle equivalence and the core invariants at small
//! occupation numbers.
//!
//! Every check has a stable name; the runner stops at the first failure and
//! reports which invariant broke. The moment-table comparison accepts an
//! injected perturbation so the surrounding harness can verify that a wrong
//! coefficient is actually caught and attributed.

use ndarray::Array2;
use num_complex::Complex64;

use crate::boson;
use crate::channel::{apply, beamsplitter_channel, dephase, random_channel, BranchChannel};
use crate::closed_form::{
    delta_phi_recycled_bs, plain_closed_form_general, plain_closed_form_sq, plain_closed_form_tf,
    NtMoments,
};
use crate::donor::{custom_state, nt_moments, twin_fock, NumberCorrelatedState};
use crate::linalg::{adjoint, fro_norm, hermiticity_defect, identity};
use crate::moments::{
    conditional_moments, plain_sensitivity, recycled_sensitivity, MomentProfile, SignalKind,
};
use crate::oracle::{brute_force_joint_state, brute_force_moments};
use crate::sector::{build_spin_operators, mz_rotation};

/// A named invariant that did not hold.
#[derive(Debug, Clone)]
pub struct CheckFailure {
    pub name: &'static str,
    pub detail: String,
}

impl std::fmt::Display for CheckFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.name, self.detail)
    }
}

type CheckResult = std::result::Result<(), CheckFailure>;

fn fail(name: &'static str, detail: String) -> CheckResult {
    Err(CheckFailure { name, detail })
}

fn ensure(name: &'static str, ok: bool, detail: impl FnOnce() -> String) -> CheckResult {
    if ok {
        Ok(())
    } else {
        fail(name, detail())
    }
}

/// Donor states the suite exercises; all fit under the oracle cap.
fn test_donors() -> Vec<NumberCorrelatedState> {
    let mut donors = vec![twin_fock(4).unwrap(), twin_fock(8).unwrap()];
    // truncated, renormalized squeezed-type pure state on four levels
    let c: Vec<f64> = (0..4).map(|n| 0.55f64.powi(n)).collect();
    let norm: f64 = c.iter().map(|x| x * x).sum();
    let mut rho = Array2::<Complex64>::zeros((4, 4));
    for m in 0..4 {
        for n in 0..4 {
            rho[[m, n]] = Complex64::new(c[m] * c[n] / norm, 0.0);
        }
    }
    donors.push(custom_state(rho).unwrap());
    // classically correlated diagonal mixture
    let mut rho = Array2::<Complex64>::zeros((4, 4));
    rho[[0, 0]] = Complex64::new(0.35, 0.0);
    rho[[2, 2]] = Complex64::new(0.45, 0.0);
    rho[[3, 3]] = Complex64::new(0.2, 0.0);
    donors.push(custom_state(rho).unwrap());
    donors
}

fn test_channels(n_max: usize) -> Vec<BranchChannel> {
    let mut out = vec![
        beamsplitter_channel(0.3, n_max).unwrap(),
        beamsplitter_channel(0.9, n_max).unwrap(),
        dephase(&beamsplitter_channel(0.6, n_max).unwrap()),
    ];
    out.extend((0..5).map(|seed| random_channel(n_max, seed)));
    out
}

fn check_spin_operators() -> CheckResult {
    const NAME: &str = "spin-operator-algebra";
    for n in 0..=4usize {
        let (jx, jy, jz) = build_spin_operators(n);
        for (label, op) in [("Jx", &jx), ("Jy", &jy), ("Jz", &jz)] {
            let defect = hermiticity_defect(&op.matrix);
            ensure(NAME, defect < 1e-12, || {
                format!("{label} not Hermitian on sector {n} (defect {defect:e})")
            })?;
        }
        let comm = jx.matrix.dot(&jy.matrix) - jy.matrix.dot(&jx.matrix);
        let want = jz.matrix.mapv(|z| Complex64::new(0.0, 1.0) * z);
        let defect = fro_norm(&(comm - want));
        ensure(NAME, defect < 1e-12, || {
            format!("[Jx,Jy] != i Jz on sector {n} (defect {defect:e})")
        })?;
        for phi in [0.4, 1.3] {
            let u = mz_rotation(n, phi);
            let uni = fro_norm(&(adjoint(&u.matrix).dot(&u.matrix) - identity(n + 1)));
            ensure(NAME, uni < 1e-12, || {
                format!("rotation not unitary on sector {n} (defect {uni:e})")
            })?;
            let inv = fro_norm(&(u.matrix.dot(&mz_rotation(n, -phi).matrix) - identity(n + 1)));
            ensure(NAME, inv < 1e-12, || {
                format!("rotation inverse fails on sector {n} (defect {inv:e})")
            })?;
        }
    }
    Ok(())
}

fn check_donor_states() -> CheckResult {
    const NAME: &str = "donor-state-normalization";
    for donor in test_donors() {
        let sum: f64 = donor.probabilities().iter().sum();
        let err = (sum + donor.tail_mass() - 1.0).abs();
        ensure(NAME, err < 1e-14, || {
            format!("probabilities plus tail off by {err:e}")
        })?;
        let m1 = nt_moments(&donor, 1);
        let m2 = nt_moments(&donor, 2);
        let m4 = nt_moments(&donor, 4);
        ensure(NAME, m2 + 1e-12 >= m1 * m1, || {
            format!("<Nt^2> = {m2} below <Nt>^2 = {}", m1 * m1)
        })?;
        ensure(NAME, m4 + 1e-9 >= m1.powi(4), || {
            format!("<Nt^4> = {m4} below <Nt>^4 = {}", m1.powi(4))
        })?;
    }
    Ok(())
}

fn check_channels() -> CheckResult {
    const NAME: &str = "channel-physicality";
    for (i, ch) in test_channels(4).iter().enumerate() {
        if let Err(e) = ch.validate() {
            return fail(NAME, format!("channel {i}: {e}"));
        }
    }
    // binomial conditional moments of the beamsplitter
    let q = 0.45;
    let ch = beamsplitter_channel(q, 4).unwrap();
    for n in 0..=4usize {
        let (m1, m2, _, _) = conditional_moments(&ch, n);
        let nf = n as f64;
        let want1 = q * nf;
        let want2 = q * nf * (1.0 - q) + q * q * nf * nf;
        ensure(NAME, (m1 - want1).abs() < 1e-12, || {
            format!("binomial mean off at N = {n}: {m1} vs {want1}")
        })?;
        ensure(NAME, (m2 - want2).abs() < 1e-12, || {
            format!("binomial second moment off at N = {n}: {m2} vs {want2}")
        })?;
    }
    Ok(())
}

fn check_convexity() -> CheckResult {
    const NAME: &str = "convexity-bound";
    for donor in test_donors() {
        for ch in test_channels(4) {
            let joint = apply(&ch, &donor).unwrap();
            let mut n1n2 = 0.0;
            let mut n1 = 0.0;
            for n in 0..=joint.n_max() {
                let mean: f64 = joint.sector(n)
                    .probs()
                    .iter()
                    .enumerate()
                    .map(|(k, p)| k as f64 * p)
                    .sum();
                n1n2 += joint.weights()[n] * mean * mean;
                n1 += joint.weights()[n] * mean;
            }
            ensure(NAME, n1n2 >= n1 * n1 - 1e-10, || {
                format!("<N1 N2> = {n1n2} below <N1>^2 = {}", n1 * n1)
            })?;
        }
    }
    Ok(())
}

fn moment_oracle_check(
    name: &'static str,
    kind: SignalKind,
    tables: Option<(&boson::TrigTable, &boson::TrigTable)>,
) -> CheckResult {
    let phis = [0.0, 0.1, 0.5, 1.0, 2.0];
    for donor in test_donors() {
        for ch in test_channels(4) {
            let joint = apply(&ch, &donor).unwrap();
            let profile = match tables {
                Some((mean, second)) => MomentProfile::with_tables(&joint, kind, mean, second),
                None => MomentProfile::new(&joint, kind),
            };
            let state = brute_force_joint_state(&donor, &ch, 4).unwrap();
            for phi in phis {
                let engine = profile.moments_at(phi);
                let reference = brute_force_moments(&state, phi, kind == SignalKind::Recycled);
                let d_mean = (engine.mean - reference.mean).abs();
                let d_second = (engine.second - reference.second).abs();
                ensure(name, d_mean < 1e-10, || {
                    format!("mean off by {d_mean:e} at phi = {phi}")
                })?;
                ensure(name, d_second < 1e-10, || {
                    format!("second moment off by {d_second:e} at phi = {phi}")
                })?;
            }
        }
    }
    Ok(())
}

fn check_dephasing_invariance() -> CheckResult {
    const NAME: &str = "dephasing-invariance";
    for donor in test_donors() {
        for ch in test_channels(4) {
            let a = recycled_sensitivity(&apply(&ch, &donor).unwrap());
            let b = recycled_sensitivity(&apply(&dephase(&ch), &donor).unwrap());
            match (a, b) {
                (Ok(a), Ok(b)) => {
                    let d = (a.delta_phi - b.delta_phi).abs();
                    ensure(NAME, d < 1e-12, || {
                        format!("sensitivity moved by {d:e} under dephasing")
                    })?;
                }
                (Err(_), Err(_)) => {}
                _ => return fail(NAME, "dephasing changed error behavior".into()),
            }
        }
    }
    Ok(())
}

fn check_anticorrelation() -> CheckResult {
    const NAME: &str = "anticorrelation";
    for donor in test_donors() {
        for ch in test_channels(4) {
            let state = brute_force_joint_state(&donor, &ch, 4).unwrap();
            let norm = state.anticorrelation_norm();
            ensure(NAME, norm < 1e-12, || {
                format!("(Jz + Lz) rho has norm {norm:e}")
            })?;
        }
    }
    Ok(())
}

fn check_gradients() -> CheckResult {
    const NAME: &str = "gradient-check";
    let h = 1e-5;
    for donor in test_donors() {
        let ch = beamsplitter_channel(0.7, 4).unwrap();
        let joint = apply(&ch, &donor).unwrap();
        for kind in [SignalKind::Recycled, SignalKind::Plain] {
            let profile = MomentProfile::new(&joint, kind);
            for phi in [0.3, 0.8, 1.2] {
                let analytic = profile.dmean_at(phi);
                if analytic.abs() < 1e-8 {
                    continue;
                }
                let fd = (profile.mean_at(phi + h) - profile.mean_at(phi - h)) / (2.0 * h);
                let rel = ((analytic - fd) / analytic).abs();
                ensure(NAME, rel < 1e-6, || {
                    format!("derivative off by rel {rel:e} at phi = {phi}")
                })?;
            }
        }
    }
    Ok(())
}

fn check_closed_forms() -> CheckResult {
    const NAME: &str = "closed-form-consistency";
    // specializations of the general optimal-point expression
    for (nt, q) in [(8.0f64, 0.6), (10.0, 0.9), (40.0, 0.75)] {
        let tf_m = NtMoments {
            m1: nt,
            m2: nt * nt,
            m3: nt.powi(3),
            m4: nt.powi(4),
        };
        let gen = plain_closed_form_general(tf_m, q).unwrap();
        let tf = plain_closed_form_tf(q * nt, q).unwrap();
        let rel = ((gen - tf) / tf).abs();
        ensure(NAME, rel < 1e-9, || {
            format!("twin-Fock closed forms disagree by rel {rel:e}")
        })?;
        let v = nt * (nt + 2.0);
        let sq_m = NtMoments {
            m1: nt,
            m2: v + nt * nt,
            m3: 2.0 * nt * (2.0 + 3.0 * v),
            m4: 8.0 * nt * (nt + 1.0) * (1.0 + 3.0 * v),
        };
        let gen = plain_closed_form_general(sq_m, q).unwrap();
        let sq = plain_closed_form_sq(q * nt, q).unwrap();
        let rel = ((gen - sq) / sq).abs();
        ensure(NAME, rel < 1e-9, || {
            format!("squeezed closed forms disagree by rel {rel:e}")
        })?;
    }
    // engine agreement on a twin-Fock instance
    let donor = twin_fock(8).unwrap();
    for q in [0.4, 0.8] {
        let ch = beamsplitter_channel(q, 4).unwrap();
        let joint = apply(&ch, &donor).unwrap();
        let rec = recycled_sensitivity(&joint).unwrap().delta_phi;
        let want = delta_phi_recycled_bs(0.0, 8.0, q).unwrap();
        let rel = ((rec - want) / want).abs();
        ensure(NAME, rel < 1e-10, || {
            format!("recycled engine vs closed form off by rel {rel:e} at q = {q}")
        })?;
        let plain = plain_sensitivity(&joint).unwrap().delta_phi;
        let want = plain_closed_form_tf(q * 8.0, q).unwrap();
        let rel = ((plain - want) / want).abs();
        ensure(NAME, rel < 1e-9, || {
            format!("plain engine vs closed form off by rel {rel:e} at q = {q}")
        })?;
    }
    Ok(())
}

/// Run the complete suite. Returns the names of the passed checks in order,
/// or the first failure.
///
/// `fault` scales one coefficient of the recycled second-moment table by
/// `1 + fault`; any nonzero value must trip the recycled-moment oracle
/// comparison.
pub fn run_self_test(fault: Option<f64>) -> std::result::Result<Vec<&'static str>, CheckFailure> {
    let mut passed = Vec::new();
    let mut run = |name: &'static str, result: CheckResult| -> CheckResult {
        result?;
        passed.push(name);
        Ok(())
    };

    run("spin-operator-algebra", check_spin_operators())?;
    run("donor-state-normalization", check_donor_states())?;
    run("channel-physicality", check_channels())?;
    run("convexity-bound", check_convexity())?;

    let recycled_name: &'static str = "recycled-moment-oracle";
    let recycled = match fault {
        Some(eps) => {
            let t = boson::tables();
            let mut second = t.recycled_second.clone();
            let (_, _, poly) = &mut second.0[0];
            let slot = poly
                .0
                .iter_mut()
                .flatten()
                .find(|c| **c != 0.0)
                .expect("table has nonzero coefficients");
            *slot *= 1.0 + eps;
            moment_oracle_check(
                recycled_name,
                SignalKind::Recycled,
                Some((&t.recycled_mean, &second)),
            )
        }
        None => moment_oracle_check(recycled_name, SignalKind::Recycled, None),
    };
    run(recycled_name, recycled)?;
    run(
        "plain-moment-oracle",
        moment_oracle_check("plain-moment-oracle", SignalKind::Plain, None),
    )?;
    run("dephasing-invariance", check_dephasing_invariance())?;
    run("anticorrelation", check_anticorrelation())?;
    run("gradient-check", check_gradients())?;
    run("closed-form-consistency", check_closed_forms())?;
    Ok(passed)
}
