//! Labeled composite state space: photon path and polarization, plus one
//! two-level environment per registered mirror.

mod amplitude;
mod density;
mod label;
pub(crate) mod operator;
mod state;

pub use amplitude::{Amplitude, FirstOrder};
pub use density::{reduced_mirror_state, reduced_mirror_state_mixture, MirrorDensity, Mixture};
pub use label::{BasisLabel, Env, MirrorId, MirrorLevel, Pol, PortId, Registry};
pub use operator::{projector, Operator, Predicate, ResolvedPredicate};
pub use state::{inner_product, StateVector};

/// Tolerance for normalization and Hermiticity checks.
pub const TOLERANCE: f64 = 1e-12;
