//! Frequency-noise calibration of the vacuum optomechanical coupling rate g₀.
//!
//! The crate covers both directions of the measurement:
//!
//! * forward: thermal mechanical noise transduced by a detuned (direct) or
//!   resonant (homodyne) cavity probe, plus a phase-modulation calibration
//!   tone, rendered as the spectrum a resolution-bandwidth-limited analyzer
//!   would display ([`synth`]);
//! * inverse: locating the tone, fitting the mechanical Lorentzian and turning
//!   the ratio of their areas into g₀ ([`analysis`]).
//!
//! The closed-form transduction functions in [`transduction`] are checked
//! against a sideband-amplitude model of the driven cavity in [`field`], and
//! [`modeshift`] evaluates dielectric-perturbation frequency shifts as an
//! independent route to the coupling parameter G.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod config;
pub mod error;
pub mod field;
pub mod fit;
pub mod modeshift;
pub mod physics;
pub mod quad;
pub mod specest;
pub mod spectrum;
pub mod synth;
pub mod transduction;

pub use error::{Error, Result};
