//! Atomic-physics primitives for the ¹S₀→³P₁ pump line and the ¹S₀→¹P₁ MOT
//! line of ¹⁷⁴Yb.

use std::f64::consts::PI;

use crate::units::{angular, BOHR_HZ_PER_GAUSS, BOLTZMANN, HBAR, SPEED_OF_LIGHT, YB174_MASS};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransitionLabel {
    /// ¹S₀→³P₁ intercombination line.
    Green556,
    /// ¹S₀→¹P₁ MOT line.
    Blue399,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionSpec {
    pub label: TransitionLabel,
    /// Wavelength (m).
    pub wavelength: f64,
    /// Natural linewidth Γ (rad/s).
    pub linewidth: f64,
    /// Saturation intensity (W/m²).
    pub saturation_intensity: f64,
    pub lande_g_upper: f64,
    pub sublevels_upper: Vec<i32>,
}

impl TransitionSpec {
    pub fn new(label: TransitionLabel, wavelength: f64, linewidth: f64, lande_g_upper: f64) -> Result<Self> {
        let saturation_intensity = saturation_intensity(wavelength, linewidth)?;
        Ok(Self {
            label,
            wavelength,
            linewidth,
            saturation_intensity,
            lande_g_upper,
            sublevels_upper: vec![-1, 0, 1],
        })
    }

    pub fn green_556() -> Self {
        Self::new(TransitionLabel::Green556, 556e-9, angular(182e3), 1.5).expect("valid constants")
    }

    pub fn blue_399() -> Self {
        Self::new(TransitionLabel::Blue399, 399e-9, angular(29e6), 1.0).expect("valid constants")
    }

    /// Photon energy hc/λ (J).
    pub fn photon_energy(&self) -> f64 {
        2.0 * PI * HBAR * SPEED_OF_LIGHT / self.wavelength
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AtomEnsemble {
    pub total_atoms: f64,
    /// rms radius of the (isotropic Gaussian) cloud (m).
    pub cloud_radius_rms: f64,
    /// Temperature (K).
    pub temperature: f64,
    /// Atomic mass (kg).
    pub species_mass: f64,
}

impl AtomEnsemble {
    pub fn new(total_atoms: f64, cloud_radius_rms: f64, temperature: f64) -> Result<Self> {
        if !(total_atoms >= 0.0) {
            return Err(Error::Domain(format!("atom number must be >= 0, got {total_atoms}")));
        }
        if !(cloud_radius_rms > 0.0) || !(temperature > 0.0) {
            return Err(Error::Domain("cloud radius and temperature must be positive".into()));
        }
        Ok(Self {
            total_atoms,
            cloud_radius_rms,
            temperature,
            species_mass: YB174_MASS,
        })
    }
}

impl Default for AtomEnsemble {
    fn default() -> Self {
        Self::new(1e7, 1e-3, 2e-3).expect("valid defaults")
    }
}

/// Two-level saturation intensity I_sat = 2π²ħcΓ / (3λ³).
pub fn saturation_intensity(wavelength: f64, linewidth: f64) -> Result<f64> {
    if !(wavelength > 0.0) || !(linewidth > 0.0) {
        return Err(Error::Domain(format!(
            "wavelength and linewidth must be positive (got {wavelength:e} m, {linewidth:e} rad/s)"
        )));
    }
    Ok(2.0 * PI * PI * HBAR * SPEED_OF_LIGHT * linewidth / (3.0 * wavelength.powi(3)))
}

/// On-resonance saturation parameter of a Gaussian beam.
///
/// Uses the mean intensity `P / (π w²)` over the 1/e² disk, not the peak
/// intensity `2P / (π w²)`. With this convention 7 mW in a 2.4 mm beam on the
/// green line gives s ≈ 280.
pub fn saturation_parameter(power: f64, waist_radius: f64, saturation_intensity: f64) -> Result<f64> {
    if !(power >= 0.0) {
        return Err(Error::Domain(format!("power must be >= 0, got {power:e}")));
    }
    if !(waist_radius > 0.0) || !(saturation_intensity > 0.0) {
        return Err(Error::Domain("waist radius and saturation intensity must be positive".into()));
    }
    Ok(power / (PI * waist_radius * waist_radius) / saturation_intensity)
}

/// Inverse of [`saturation_parameter`]: power needed for a given s.
pub fn power_for_saturation(s: f64, waist_radius: f64, saturation_intensity: f64) -> f64 {
    s * saturation_intensity * PI * waist_radius * waist_radius
}

/// Linear Zeeman shift g·m·μ_B·B/h in Hz.
pub fn zeeman_shift(g: f64, m: i32, b_gauss: f64) -> Result<f64> {
    if m.abs() > 1 {
        return Err(Error::Domain(format!("sublevel m = {m} outside J = 1 manifold")));
    }
    Ok(g * f64::from(m) * BOHR_HZ_PER_GAUSS * b_gauss)
}

/// One-dimensional rms Doppler shift √(k_B T / M) / λ in Hz.
pub fn doppler_sigma(temperature: f64, mass: f64, wavelength: f64) -> Result<f64> {
    if !(temperature >= 0.0) || !(mass > 0.0) || !(wavelength > 0.0) {
        return Err(Error::Domain("temperature, mass and wavelength must be positive".into()));
    }
    Ok((BOLTZMANN * temperature / mass).sqrt() / wavelength)
}

/// Steady-state excited fraction of a driven two-level atom.
///
/// `detuning` and `doppler_sigma` are in Hz, `linewidth` in rad/s. The
/// homogeneous, power-broadened FWHM Γ√(1+s) is added in quadrature to the
/// Doppler FWHM 2√(2 ln 2)·σ_D:
///
/// ρ = (s/2)/(1+s) · 1 / (1 + (2δ/W)²),  W² = Γ²(1+s) + (2π·FWHM_D)²
///
/// which reduces to the textbook (s/2)/(1 + s + (2δ/Γ)²) when σ_D = 0.
pub fn excited_population(detuning: f64, s: f64, linewidth: f64, doppler_sigma: f64) -> Result<f64> {
    if !(s >= 0.0) || !(linewidth > 0.0) || !(doppler_sigma >= 0.0) {
        return Err(Error::Domain("need s >= 0, linewidth > 0, doppler sigma >= 0".into()));
    }
    if s.is_infinite() {
        return Ok(0.5);
    }
    let doppler_fwhm = angular(doppler_sigma * 2.0 * (2.0 * std::f64::consts::LN_2).sqrt());
    let width_sq = linewidth * linewidth * (1.0 + s) + doppler_fwhm * doppler_fwhm;
    let x = 2.0 * angular(detuning);
    Ok(0.5 * s / (1.0 + s) / (1.0 + x * x / width_sq))
}
