//! Physical constants (CODATA 2018) and unit helpers.

use std::f64::consts::PI;

pub const PLANCK: f64 = 6.626_070_15e-34;
pub const HBAR: f64 = PLANCK / (2.0 * PI);
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const BOLTZMANN: f64 = 1.380_649e-23;
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;

/// Bohr magneton over Planck's constant, Hz per gauss.
pub const BOHR_HZ_PER_GAUSS: f64 = 1.3996e6;

/// Mass of ¹⁷⁴Yb.
pub const YB174_MASS: f64 = 173.938_862_1 * ATOMIC_MASS_UNIT;

pub const MHZ: f64 = 1e6;
pub const KHZ: f64 = 1e3;

/// Converts an ordinary frequency (Hz) to an angular rate (rad/s).
#[inline]
pub fn angular(hz: f64) -> f64 {
    2.0 * PI * hz
}

/// Converts an angular rate (rad/s) to an ordinary frequency (Hz).
#[inline]
pub fn ordinary(rad_per_s: f64) -> f64 {
    rad_per_s / (2.0 * PI)
}
