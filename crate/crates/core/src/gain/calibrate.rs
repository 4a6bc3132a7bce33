use super::{Apparatus, CalibrationConstants, GainModel, OperatingPoint, SteadyStateOptions};
use crate::numerics::bisect;
use crate::units::MHZ;
use crate::{Error, Result};

/// Reference observations the free constants are tied to.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationTargets {
    /// TEM₀ threshold in coupled atoms at `threshold_point`.
    pub threshold_coupled_atoms: f64,
    pub threshold_point: OperatingPoint,
    /// TEM₀ photon number expected at `photon_point`.
    pub reference_photons: f64,
    pub photon_point: OperatingPoint,
    pub virtual_level_offset: f64,
}

impl CalibrationTargets {
    /// Threshold anchor on the σ⁺ Zeeman resonance of `base`; photon anchor
    /// at `photon_pump_detuning` and `photon_pump_power`, both with the
    /// cavity on the two-photon resonance.
    pub fn standard(base: &OperatingPoint, photon_pump_detuning: f64, photon_pump_power: f64) -> Self {
        let threshold_point = base.clone().on_two_photon_resonance();
        let photon_point = OperatingPoint {
            pump_detuning: photon_pump_detuning,
            pump_power: photon_pump_power,
            ..base.clone()
        }
        .on_two_photon_resonance();
        Self {
            threshold_coupled_atoms: 5000.0,
            threshold_point,
            reference_photons: 6e5,
            photon_point,
            virtual_level_offset: 0.0,
        }
    }
}

impl Default for CalibrationTargets {
    fn default() -> Self {
        Self::standard(&OperatingPoint::default(), SINGLE_MODE_PUMP_DETUNING, SINGLE_MODE_PUMP_POWER)
    }
}

/// Pump detuning of the pump-power threshold scan, on the blue side of the
/// σ⁺ resonance. Off resonance the pump no longer saturates and the TEM₀
/// threshold sits near 3 mW.
pub const SINGLE_MODE_PUMP_DETUNING: f64 = 6.7 * MHZ;
/// Single-mode point between the TEM₀ and TEM₃₇ thresholds.
pub const SINGLE_MODE_PUMP_POWER: f64 = 3.5e-3;

/// Solves for the gain scale (TEM₀ threshold at the reference atom number)
/// and the saturation photon number (reference photon number at the
/// single-mode point).
pub fn calibrate(apparatus: &Apparatus, targets: &CalibrationTargets) -> Result<CalibrationConstants> {
    if !(targets.threshold_coupled_atoms > 0.0) || !(targets.reference_photons > 0.0) {
        return Err(Error::Calibration("reference threshold and photon number must be positive".into()));
    }
    let trial = CalibrationConstants {
        virtual_level_offset: targets.virtual_level_offset,
        ..CalibrationConstants::uncalibrated()
    };
    let model = GainModel::new(apparatus.clone(), trial)?;
    let mut op = targets.threshold_point.clone();
    op.total_atoms = model.total_atoms_for_coupled(targets.threshold_coupled_atoms);
    let unit_gain = model.mode_gain(&op, 0)?.total;
    if !(unit_gain > 0.0) {
        return Err(Error::Calibration("TEM0 gain vanishes at the threshold reference point".into()));
    }
    // G is linear in the scale, so this is the exact root of G = κ.
    let gain_scale = model.kappa() / unit_gain;

    let scaled = model.with_calibration(CalibrationConstants { gain_scale, ..trial })?;
    let fundamental = scaled
        .families()
        .iter()
        .position(|&o| o == 0)
        .ok_or_else(|| Error::Calibration("TEM0 must be among the modelled families".into()))?;
    let opts = SteadyStateOptions::default();
    let gains: Vec<f64> = scaled.gains(&targets.photon_point)?.iter().map(|g| g.total).collect();
    let photons_at = |log_nsat: f64| -> f64 {
        let m = scaled.with_calibration(CalibrationConstants {
            gain_scale,
            saturation_photons: 10f64.powf(log_nsat),
            virtual_level_offset: targets.virtual_level_offset,
        });
        match m.and_then(|m| m.solve_gains(&gains, &opts)) {
            Ok(sol) => sol.families[fundamental].photons.ln() - targets.reference_photons.ln(),
            Err(_) => f64::NAN,
        }
    };
    let log_nsat = bisect(0.0, 15.0, 1e-13, photons_at).ok_or_else(|| {
        Error::Calibration("reference photon number not reachable: photon reference point is below threshold".into())
    })?;
    let constants = CalibrationConstants {
        gain_scale,
        saturation_photons: 10f64.powf(log_nsat),
        virtual_level_offset: targets.virtual_level_offset,
    };
    constants.validate()?;
    Ok(constants)
}
