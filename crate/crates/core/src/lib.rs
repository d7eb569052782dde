//! Link-level simulator for a LEO small-satellite optical QKD downlink.
//!
//! The crate composes per-channel optical losses over a satellite pass and
//! evaluates protocol performance at desk scale:
//!
//! - [`orbit`]: analytic circular-orbit pass geometry (elevation, zenith
//!   angle, slant range vs. time).
//! - [`beam`]: Gaussian-beam propagation, collected power fraction,
//!   geometric loss, expected photon counts.
//! - [`atmosphere`]: parametric transmissivity, degree-of-polarization, and
//!   night-sky background / signal-fraction profiles.
//! - [`turbulence`]: Hufnagel-Valley profile, Rytov scintillation with
//!   log-normal fading, beam wander, Rayleigh pointing, and the probability
//!   distribution of the transmission coefficient.
//! - [`bb84`]: loss-budget assembly, QBER, Monte Carlo sifted key rate, and
//!   QBER-gated active time.
//! - [`e91`]: two-qubit statevector simulation of the entanglement-based
//!   protocol with outcome-randomizing loss channels and the CHSH statistic
//!   over a pass.
//!
//! Everything is deterministic under a fixed seed: stochastic paths draw
//! from counter-mode RNG streams keyed by (seed, sample index).

// Validation guards use `!(x > 0.0)` so NaN fails closed.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod atmosphere;
pub mod bb84;
pub mod beam;
pub mod e91;
pub mod error;
pub mod math;
pub mod orbit;
pub mod turbulence;

pub use error::{Error, Result};
