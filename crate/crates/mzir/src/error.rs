//! Crate-wide error type.

use thiserror::Error;

/// Everything that can go wrong while building states, channels, or reports.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Twin-Fock states need an even total occupation.
    #[error("twin-Fock total occupation must be even, got {0}")]
    OddTotal(u64),

    /// A squeezed state would need more Fock levels than the hard cap allows.
    #[error("squeezed-state truncation needs n_max = {needed}, above the cap {cap}")]
    TruncationOverflow { needed: usize, cap: usize },

    /// Density matrix has a negative eigenvalue beyond tolerance.
    #[error("matrix is not positive semidefinite (smallest eigenvalue {0:.3e})")]
    NotPsd(f64),

    /// Density matrix trace is off from one.
    #[error("trace differs from one by {0:.3e}")]
    BadTrace(f64),

    /// Input matrix is not Hermitian within tolerance.
    #[error("matrix is not Hermitian (max |A - A^dag| entry {0:.3e})")]
    NotHermitian(f64),

    /// Transfer efficiency must lie in [0, 1].
    #[error("transfer efficiency must be in [0, 1], got {0}")]
    BadEfficiency(f64),

    /// Per-sector channel probabilities do not sum to one.
    #[error("channel is not trace preserving on sector {sector} (sum {sum:.12})")]
    NotTracePreserving { sector: usize, sum: f64 },

    /// A per-sector branch output matrix is not a density matrix.
    #[error("sector {sector} output is not positive (smallest eigenvalue {eig:.3e})")]
    NotPositive { sector: usize, eig: f64 },

    /// The sector-restricted Choi matrix of a custom channel failed its PSD check.
    #[error("channel Choi matrix is not PSD (smallest eigenvalue {0:.3e})")]
    ChoiNotPsd(f64),

    /// Donor state and channel disagree on the truncation order.
    #[error("donor needs sectors up to {donor}, channel only has {channel}")]
    TruncationMismatch { donor: usize, channel: usize },

    /// The brute-force oracle refuses to run above its cost cap.
    #[error("oracle cap is {cap}, requested {requested}")]
    CapExceeded { requested: usize, cap: usize },

    /// Sensitivity is undefined without particles in the interferometer.
    #[error("no particles take part in the measurement (N_a = {0:.3e})")]
    NoParticles(f64),

    /// The plain signal carries no phase information for this state.
    #[error("signal is degenerate: <Jz^2> - <Jx^2> = {0:.3e}")]
    DegenerateSignal(f64),

    /// The mean-signal curve changes direction on the inversion interval.
    #[error("mean signal is not monotone on (0, pi/2); derivative changes sign near phi = {0}")]
    NonMonotone(f64),

    /// Moment inputs violate the convexity relations they must satisfy.
    #[error("moment inputs violate convexity: <Nt^{k}> = {value:.6e} < <Nt>^{k} = {bound:.6e}")]
    BadMoments { k: u32, value: f64, bound: f64 },

    /// Quantum Fisher information is only implemented for pure global states.
    #[error("state is not pure ({0}); pure-state Fisher information does not apply")]
    NotPure(&'static str),

    /// Phase estimation needs at least one measurement record.
    #[error("no measurement records supplied")]
    NoRecords,

    /// A serialized state or channel document could not be used.
    #[error("malformed input: {0}")]
    Malformed(String),
}

pub type Result<T> = std::result::Result<T, Error>;
