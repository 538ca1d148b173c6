//! JSON schemas for states and channels, CSV helpers, and the numeric
//! formatting used by every machine-readable output.
//!
//! State documents follow `{kind, params, n_max, tail_mass, rho}` with the
//! density matrix as row-major `[re, im]` pairs; the row/column index is the
//! **per-mode** occupation (total particle number `2M` at index `M`).
//! Channel documents follow `{kind, q?, n_max, sectors: [{n, sigma}]}` with
//! each sector's branch output state stored dense.

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::channel::{
    beamsplitter_channel, rebuild_channel, BranchChannel, ChannelKind, SectorDensity,
};
use crate::donor::{NumberCorrelatedState, StateKind};
use crate::error::{Error, Result};
use crate::estimate::{signal_from_record, MeasurementRecord};

/// Render with 17 significant digits so diffs between runs are meaningful.
pub fn g17(x: f64) -> String {
    format!("{x:.16e}")
}

fn pairs_from_matrix(m: &Array2<Complex64>) -> Vec<[f64; 2]> {
    m.iter().map(|z| [z.re, z.im]).collect()
}

fn matrix_from_pairs(pairs: &[[f64; 2]], dim: usize) -> Result<Array2<Complex64>> {
    if pairs.len() != dim * dim {
        return Err(Error::Malformed(format!(
            "expected {} matrix entries, found {}",
            dim * dim,
            pairs.len()
        )));
    }
    Ok(Array2::from_shape_vec(
        (dim, dim),
        pairs.iter().map(|p| Complex64::new(p[0], p[1])).collect(),
    )
    .expect("shape checked above"))
}

#[derive(Serialize, Deserialize)]
struct StateFile {
    kind: String,
    params: serde_json::Value,
    n_max: usize,
    tail_mass: f64,
    rho: Vec<[f64; 2]>,
}

/// Serialize a donor state.
pub fn state_to_json(state: &NumberCorrelatedState) -> String {
    let (kind, params) = match state.kind() {
        StateKind::TwinFock { n_total } => ("twin-fock", json!({ "n_total": n_total })),
        StateKind::Squeezed { r, theta, tail_tol } => (
            "squeezed",
            json!({ "r": r, "theta": theta, "tail_tol": tail_tol }),
        ),
        StateKind::Custom => ("custom", json!({})),
    };
    let file = StateFile {
        kind: kind.to_string(),
        params,
        n_max: state.n_max(),
        tail_mass: state.tail_mass(),
        rho: pairs_from_matrix(state.rho()),
    };
    serde_json::to_string_pretty(&file).expect("state serialization cannot fail")
}

/// Parse and validate a donor state document.
pub fn state_from_json(text: &str) -> Result<NumberCorrelatedState> {
    let file: StateFile =
        serde_json::from_str(text).map_err(|e| Error::Malformed(e.to_string()))?;
    let rho = matrix_from_pairs(&file.rho, file.n_max + 1)?;
    let kind = match file.kind.as_str() {
        "twin-fock" => StateKind::TwinFock {
            n_total: file.params["n_total"]
                .as_u64()
                .ok_or_else(|| Error::Malformed("twin-fock needs n_total".into()))?,
        },
        "squeezed" => StateKind::Squeezed {
            r: file.params["r"]
                .as_f64()
                .ok_or_else(|| Error::Malformed("squeezed needs r".into()))?,
            theta: file.params["theta"].as_f64().unwrap_or(0.0),
            tail_tol: file.params["tail_tol"].as_f64().unwrap_or(1e-12),
        },
        "custom" => StateKind::Custom,
        other => return Err(Error::Malformed(format!("unknown state kind `{other}`"))),
    };
    NumberCorrelatedState::from_parts(rho, file.tail_mass, kind)
}

#[derive(Serialize, Deserialize)]
struct SectorFile {
    #[serde(rename = "N")]
    n: usize,
    sigma: Vec<[f64; 2]>,
}

#[derive(Serialize, Deserialize)]
struct ChannelFile {
    kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    q: Option<f64>,
    n_max: usize,
    sectors: Vec<SectorFile>,
}

/// Serialize a channel with dense per-sector branch states.
pub fn channel_to_json(channel: &BranchChannel) -> String {
    let (kind, q) = match channel.kind() {
        ChannelKind::Beamsplitter { q } => ("beamsplitter", Some(q)),
        ChannelKind::Dephased => ("dephased", None),
        ChannelKind::Custom => ("custom", None),
    };
    let sectors = (0..=channel.n_max())
        .map(|n| {
            let s = channel.sector(n);
            let dim = s.dim();
            let mut sigma = Vec::with_capacity(dim * dim);
            for row in 0..dim {
                for col in 0..dim {
                    let z = s.element(row, col);
                    sigma.push([z.re, z.im]);
                }
            }
            SectorFile { n, sigma }
        })
        .collect();
    let file = ChannelFile {
        kind: kind.to_string(),
        q,
        n_max: channel.n_max(),
        sectors,
    };
    serde_json::to_string_pretty(&file).expect("channel serialization cannot fail")
}

/// Parse and validate a channel document.
///
/// Beamsplitter documents are rebuilt exactly from `q` and checked against
/// the stored sectors, so a corrupted file fails loudly instead of silently
/// shifting the conditional distributions.
pub fn channel_from_json(text: &str) -> Result<BranchChannel> {
    let file: ChannelFile =
        serde_json::from_str(text).map_err(|e| Error::Malformed(e.to_string()))?;
    if file.sectors.len() != file.n_max + 1 {
        return Err(Error::Malformed(format!(
            "expected {} sectors, found {}",
            file.n_max + 1,
            file.sectors.len()
        )));
    }
    let mut dense = Vec::with_capacity(file.sectors.len());
    for (i, s) in file.sectors.iter().enumerate() {
        if s.n != i {
            return Err(Error::Malformed(format!(
                "sector {i} labeled {}, sectors must be consecutive",
                s.n
            )));
        }
        dense.push(matrix_from_pairs(&s.sigma, i + 1)?);
    }
    match file.kind.as_str() {
        "beamsplitter" => {
            let q = file
                .q
                .ok_or_else(|| Error::Malformed("beamsplitter channel needs q".into()))?;
            let channel = beamsplitter_channel(q, file.n_max)?;
            for (n, sigma) in dense.iter().enumerate() {
                for row in 0..=n {
                    for col in 0..=n {
                        let want = channel.sector(n).element(row, col);
                        if (sigma[[row, col]] - want).norm() > 1e-9 {
                            return Err(Error::Malformed(format!(
                                "sector {n} disagrees with a beamsplitter of q = {q}"
                            )));
                        }
                    }
                }
            }
            Ok(channel)
        }
        "dephased" => {
            let sectors = dense
                .iter()
                .map(|m| SectorDensity::Diagonal((0..m.nrows()).map(|i| m[[i, i]].re).collect()))
                .collect();
            let channel = rebuild_channel(file.n_max, ChannelKind::Dephased, sectors);
            channel.validate()?;
            Ok(channel)
        }
        "custom" => {
            let sectors = dense.into_iter().map(SectorDensity::Dense).collect();
            let channel = rebuild_channel(file.n_max, ChannelKind::Custom, sectors);
            channel.validate()?;
            Ok(channel)
        }
        other => Err(Error::Malformed(format!("unknown channel kind `{other}`"))),
    }
}

/// Measurement records as CSV with the documented column set.
pub fn records_to_csv(records: &[MeasurementRecord], recycled: bool) -> String {
    let mut out = String::from("shot,N,d1,d2,k1,k2,signal\n");
    for (i, r) in records.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            i,
            r.sector(),
            r.d1,
            r.d2,
            r.k1,
            r.k2,
            g17(signal_from_record(r, recycled))
        ));
    }
    out
}
