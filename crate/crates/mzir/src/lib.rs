//! Exact engine for number-correlated Mach-Zehnder interferometry with
//! information recycling.
//!
//! A two-mode donor state with perfect number correlations is partially
//! transferred to two acceptor modes by a number-conserving channel acting
//! independently and identically on each branch; the acceptor modes feed a
//! Mach-Zehnder interferometer and all four output ports are counted. This
//! crate computes the statistics of that experiment exactly:
//!
//! * [`donor`] builds the input states (twin Fock, two-mode squeezed
//!   vacuum, arbitrary validated matrices) with controlled truncation;
//! * [`channel`] represents the transfer processes (beamsplitter, dephased,
//!   explicit tensors, random instances) and produces the product-sector
//!   joint state;
//! * [`moments`] evaluates signal moments and phase sensitivities for the
//!   information-recycled signal, which counts leftover donor particles
//!   together with the acceptor ports, and for the plain acceptor-only
//!   signal;
//! * [`closed_form`] carries every O(1) sensitivity and Fisher-information
//!   expression, each cross-checked against the moment engine;
//! * [`oracle`] is a brute-force four-mode reference implementation used to
//!   certify all of the above on small instances;
//! * [`estimate`] runs Monte Carlo measurement simulations and
//!   method-of-moments phase estimation;
//! * [`validate`] bundles the oracle-equivalence and invariant checks into
//!   a fast self-test.
//!
//! The `mzir` binary exposes the sensitivity reports, efficiency sweeps,
//! sampling experiments, and the self-test as subcommands; the `examples/`
//! directory walks through each capability as a library user.

pub mod boson;
pub mod channel;
pub mod closed_form;
pub mod donor;
pub mod error;
pub mod estimate;
pub mod io;
pub mod linalg;
pub mod moments;
pub mod oracle;
pub mod sector;
pub mod validate;

pub use channel::{
    apply, beamsplitter_channel, custom_channel, dephase, random_channel, ATensor, BranchChannel,
    ChannelKind, JointSectorState, SectorDensity,
};
pub use closed_form::{
    delta_phi_mz, delta_phi_recycled_bs, efficiency_sweep, fisher_acceptor_bs,
    fisher_acceptor_bs_from_moments, fisher_donor, fisher_report, heisenberg_bound,
    plain_closed_form_general, plain_closed_form_sq, plain_closed_form_tf, qfi_pure_numeric,
    FisherReport, NtMoments, Side, SweepRow,
};
pub use donor::{
    custom_state, nt_moments, nt_variance, squeezed_vacuum, squeezing_for_mean, twin_fock,
    NumberCorrelatedState, StateKind,
};
pub use error::{Error, Result};
pub use estimate::{
    empirical_sensitivity, estimate_phase, sample_counts, signal_from_record, EstimationRun,
    MeasurementRecord, PhaseEstimate,
};
pub use moments::{
    conditional_moments, plain_moments, plain_sensitivity, recycled_moments, recycled_sensitivity,
    MomentProfile, SensitivityReport, SignalKind, SignalMoments,
};
pub use oracle::{brute_force_joint_state, brute_force_moments, FourModeState, OracleState};
pub use sector::{build_spin_operators, mz_rotation, SectorOperator};
