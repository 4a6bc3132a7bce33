//! Simulation engine for continuous-wave lasing through a MOT-dressed virtual
//! level in cold ytterbium.
//!
//! The crate is split along the physics:
//!
//! - [`atomics`]: transitions, saturation, Zeeman shifts and pump-driven
//!   excited populations.
//! - [`geometry`]: quadrupole field, polarization selection rules, cavity
//!   transverse-mode families and their overlap with the atom cloud.
//! - [`gain`]: the two-photon gain model, calibration, threshold solving,
//!   multi-family steady state and detuning scans.
//! - [`photonstats`]: intensity-trace synthesis, click streams and the
//!   streaming g²(τ) correlator.

// `!(x > 0.0)` is deliberate: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod atomics;
pub mod error;
pub mod gain;
pub mod geometry;
pub mod numerics;
pub mod photonstats;
pub mod rng;
pub mod units;

pub use error::{Error, Result};
