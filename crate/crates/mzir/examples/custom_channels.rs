//! Working with transfer channels beyond the beamsplitter.
//!
//! Shows the explicit tensor interface with its physicality checks (trace
//! preservation, sector positivity, the optional Choi test), full
//! dephasing, random channel generation, and JSON round-trips.
//!
//! ```bash
//! cargo run -p mzir --example custom_channels
//! ```

use num_complex::Complex64;

use mzir::io::{channel_from_json, channel_to_json};
use mzir::{
    apply, beamsplitter_channel, custom_channel, dephase, random_channel, recycled_sensitivity,
    twin_fock, ATensor, Error,
};

fn main() {
    let n_max = 3;

    // a hand-built channel: each sector keeps or transfers everything with
    // occupation-dependent weights (no analogue among beamsplitters)
    let mut tensor = ATensor::zeros(n_max);
    tensor.set(0, 0, 0, 0, Complex64::new(1.0, 0.0));
    for n in 1..=n_max {
        let keep = 1.0 / (1.0 + n as f64); // heavier sectors transfer more
        tensor.set(n, 0, n, 0, Complex64::new(keep, 0.0));
        tensor.set(n, n, n, n, Complex64::new(1.0 - keep, 0.0));
    }
    let channel = custom_channel(tensor, true).unwrap();
    println!("all-or-nothing channel accepted (Choi check included):");
    for n in 1..=n_max {
        println!(
            "  P(0|{n}) = {:.4}, P({n}|{n}) = {:.4}",
            channel.conditional_prob(n, 0),
            channel.conditional_prob(n, n)
        );
    }

    let donor = twin_fock(6).unwrap();
    let rep = recycled_sensitivity(&apply(&channel, &donor).unwrap()).unwrap();
    println!(
        "  twin-Fock N_t = 6: recycled delta_phi = {:.6} vs ceiling {:.6}",
        rep.delta_phi, rep.bound_heisenberg
    );

    // an unphysical tensor is rejected with the failing sector
    let mut bad = ATensor::zeros(1);
    bad.set(0, 0, 0, 0, Complex64::new(1.0, 0.0));
    bad.set(1, 0, 1, 0, Complex64::new(0.6, 0.0));
    bad.set(1, 1, 1, 1, Complex64::new(0.3, 0.0));
    match custom_channel(bad, false) {
        Err(Error::NotTracePreserving { sector, sum }) => {
            println!("leaky tensor rejected: sector {sector} sums to {sum}");
        }
        other => panic!("expected a trace-preservation failure, got {other:?}"),
    }

    // dephasing kills every coherence but leaves the statistics alone
    let bs = beamsplitter_channel(0.7, donor.n_max()).unwrap();
    let deph = dephase(&bs);
    let a = recycled_sensitivity(&apply(&bs, &donor).unwrap()).unwrap();
    let b = recycled_sensitivity(&apply(&deph, &donor).unwrap()).unwrap();
    println!();
    println!("dephased beamsplitter: |delta_phi difference| = {:.2e}", (a.delta_phi - b.delta_phi).abs());

    // random channels are the property-test workhorse
    let rnd = random_channel(4, 2024);
    rnd.validate().unwrap();
    println!("random channel seed 2024 validates; P(n|4) = {:?}",
        rnd.sector(4).probs().iter().map(|p| (p * 1e4).round() / 1e4).collect::<Vec<_>>());

    // JSON round-trip
    let text = channel_to_json(&deph);
    let back = channel_from_json(&text).unwrap();
    println!("serialized dephased channel round-trips ({} bytes)", text.len());
    assert_eq!(back.n_max(), deph.n_max());
}
