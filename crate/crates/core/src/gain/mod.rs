//! Two-photon gain through the MOT-dressed virtual level.
//!
//! A pumped ³P₁ sublevel m emits a green photon into the cavity while a blue
//! MOT photon is absorbed, so the process is resonant when
//! δ_c = δ_p + δ_MOT and most efficient when δ_p matches the Zeeman shift of
//! m. The gain of transverse family N through channel m is
//!
//! ```text
//! G_m(N) = scale · N_tot · c_N · g_c² · ρ_ee(δ_p − Δ_z(m), w_m·s_pump) · E_m
//!          · s_MOT · L(δ_c + f_N − δ_p − δ_MOT − δ_off) / Γ_blue
//! ```
//!
//! with c_N the collective coupling factor of the family, w_m the pump
//! excitation weight (it scales the saturation parameter seen by the σ/π
//! transition), E_m the emission strength into the cavity axis, f_N the
//! family frequency offset and L a unit-peak Lorentzian of FWHM Γ_blue.

mod calibrate;
mod scan;
mod steady;
mod threshold;

pub use calibrate::{calibrate, CalibrationTargets};
pub use scan::{
    detuning_map, optimum_scan, DetuningMap, Lobe, MapCell, Optimum, OptimumScan, OptimumSearch, ScanAxis,
    ScanVariable,
};
pub use steady::{FamilyState, LaserSolution, SteadyStateOptions};
pub use threshold::ThresholdVariable;
pub use calibrate::{SINGLE_MODE_PUMP_DETUNING, SINGLE_MODE_PUMP_POWER};
pub use steady::solve_rate_equations;

use crate::atomics::{self, AtomEnsemble, TransitionSpec};
use crate::geometry::{
    self, cavity_emission_jones, pump_excitation_weights, quadrupole_field, BeamGeometry,
    CavityGeometry, Jones, MagneticEnvironment, Vec3,
};
use crate::units::{ordinary, MHZ};
use crate::{Error, Result};

/// δ_c* = δ_p + δ_MOT: cavity detuning at which the two-photon process is
/// resonant.
pub fn two_photon_resonance(pump_detuning: f64, mot_detuning: f64) -> f64 {
    pump_detuning + mot_detuning
}

/// Unit-peak Lorentzian of full width `fwhm`.
#[inline]
pub fn lorentzian(detuning: f64, fwhm: f64) -> f64 {
    let hw = 0.5 * fwhm;
    hw * hw / (detuning * detuning + hw * hw)
}

/// Power leaving through the output mirror, P = η·n·κ·hc/λ.
pub fn output_power(photons: f64, cavity: &CavityGeometry, transition: &TransitionSpec) -> Result<f64> {
    if !(photons >= 0.0) {
        return Err(Error::Domain(format!("photon number must be >= 0, got {photons}")));
    }
    Ok(cavity.output_fraction * photons * cavity.kappa * transition.photon_energy())
}

/// One experimental setting of the knobs.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatingPoint {
    /// Pump detuning from the ¹S₀→³P₁ resonance (Hz).
    pub pump_detuning: f64,
    /// TEM₀ cavity detuning from the ¹S₀→³P₁ resonance (Hz).
    pub cavity_detuning: f64,
    /// MOT detuning from the ¹S₀→¹P₁ resonance (Hz).
    pub mot_detuning: f64,
    /// Total MOT saturation parameter (all beams).
    pub mot_saturation: f64,
    /// Pump power (W).
    pub pump_power: f64,
    pub pump_polarization: Jones,
    /// Offset magnetic field (G).
    pub b_offset: Vec3,
    pub total_atoms: f64,
}

impl Default for OperatingPoint {
    fn default() -> Self {
        Self {
            pump_detuning: 5.0 * MHZ,
            cavity_detuning: -30.0 * MHZ,
            mot_detuning: -35.0 * MHZ,
            mot_saturation: 3.0,
            pump_power: 7e-3,
            pump_polarization: Jones::linear(90.0),
            b_offset: Vec3::new(2.38, 0.0, 0.0),
            total_atoms: 1e7,
        }
    }
}

impl OperatingPoint {
    /// Copy with the cavity placed on the two-photon resonance.
    pub fn on_two_photon_resonance(mut self) -> Self {
        self.cavity_detuning = two_photon_resonance(self.pump_detuning, self.mot_detuning);
        self
    }
}

/// Fit parameters absorbing efficiencies the model does not resolve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationConstants {
    pub gain_scale: f64,
    /// TEM₀ saturation photon number.
    pub saturation_photons: f64,
    /// Shift of the virtual level (Hz), signed.
    pub virtual_level_offset: f64,
}

impl CalibrationConstants {
    pub fn uncalibrated() -> Self {
        Self {
            gain_scale: 1.0,
            saturation_photons: 1e5,
            virtual_level_offset: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gain_scale > 0.0) || !(self.saturation_photons > 0.0) || !self.virtual_level_offset.is_finite() {
            return Err(Error::Calibration("gain scale and saturation photon number must be positive".into()));
        }
        Ok(())
    }
}

/// Static apparatus description.
#[derive(Debug, Clone, PartialEq)]
pub struct Apparatus {
    pub green: TransitionSpec,
    pub blue: TransitionSpec,
    /// Cloud shape and temperature; the atom number lives in the operating
    /// point.
    pub cloud: AtomEnsemble,
    pub cavity: CavityGeometry,
    pub field: MagneticEnvironment,
    /// Position of the pumped region relative to the trap centre (m).
    pub active_position: Vec3,
    pub pump_propagation: Vec3,
    pub pump_waist: f64,
    pub doppler_broadening: bool,
    /// Transverse families included in the steady state.
    pub families: Vec<u32>,
}

impl Default for Apparatus {
    fn default() -> Self {
        Self {
            green: TransitionSpec::green_556(),
            blue: TransitionSpec::blue_399(),
            cloud: AtomEnsemble::default(),
            cavity: CavityGeometry::default(),
            field: MagneticEnvironment::from_axial_gradient(36.0, Vec3::zeros()).expect("valid"),
            active_position: Vec3::zeros(),
            pump_propagation: geometry::LabFrame::vertical(),
            pump_waist: 2.4e-3,
            doppler_broadening: true,
            families: vec![0, 37, 74, 111],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct FamilyData {
    pub order: u32,
    /// Frequency offset above TEM₀ (Hz).
    pub offset: f64,
    pub coupling: f64,
}

/// Gain per Zeeman channel for one family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainBreakdown {
    pub order: u32,
    /// Gain rate (1/s) of the σ⁻, π and σ⁺ channels.
    pub channels: [f64; 3],
    pub total: f64,
    pub above_threshold: bool,
}

impl GainBreakdown {
    pub fn channel(&self, m: i32) -> f64 {
        self.channels[(m + 1) as usize]
    }
}

/// The lasing model with precomputed mode overlaps.
#[derive(Debug, Clone)]
pub struct GainModel {
    apparatus: Apparatus,
    calibration: CalibrationConstants,
    families: Vec<FamilyData>,
    /// Cross-saturation matrix over `families`.
    beta: Vec<Vec<f64>>,
    fundamental_fraction: f64,
    doppler_sigma: f64,
}

impl GainModel {
    pub fn new(apparatus: Apparatus, calibration: CalibrationConstants) -> Result<Self> {
        apparatus.cavity.validate()?;
        calibration.validate()?;
        if apparatus.families.is_empty() {
            return Err(Error::Parameter("at least one transverse family required".into()));
        }
        let mut seen = apparatus.families.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != apparatus.families.len() {
            return Err(Error::Parameter("duplicate transverse family".into()));
        }
        let families = apparatus
            .families
            .iter()
            .map(|&order| {
                Ok(FamilyData {
                    order,
                    offset: geometry::transverse_mode_frequency(order.into(), &apparatus.cavity)?,
                    coupling: geometry::family_coupling_factor(&apparatus.cloud, &apparatus.cavity, order),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let beta = geometry::cross_saturation(&apparatus.cloud, &apparatus.cavity, &apparatus.families);
        let fundamental_fraction = geometry::mode_overlap_fraction(&apparatus.cloud, &apparatus.cavity, 0);
        let doppler_sigma = if apparatus.doppler_broadening {
            atomics::doppler_sigma(apparatus.cloud.temperature, apparatus.cloud.species_mass, apparatus.green.wavelength)?
        } else {
            0.0
        };
        Ok(Self {
            apparatus,
            calibration,
            families,
            beta,
            fundamental_fraction,
            doppler_sigma,
        })
    }

    pub fn apparatus(&self) -> &Apparatus {
        &self.apparatus
    }

    pub fn calibration(&self) -> &CalibrationConstants {
        &self.calibration
    }

    pub fn with_calibration(&self, calibration: CalibrationConstants) -> Result<Self> {
        calibration.validate()?;
        let mut model = self.clone();
        model.calibration = calibration;
        Ok(model)
    }

    /// Same apparatus restricted to a different family list.
    pub fn with_families(&self, families: &[u32]) -> Result<Self> {
        let mut apparatus = self.apparatus.clone();
        apparatus.families = families.to_vec();
        Self::new(apparatus, self.calibration)
    }

    pub fn families(&self) -> Vec<u32> {
        self.families.iter().map(|f| f.order).collect()
    }

    pub fn cross_saturation(&self) -> &[Vec<f64>] {
        &self.beta
    }

    pub fn kappa(&self) -> f64 {
        self.apparatus.cavity.kappa
    }

    /// Atoms coupled to TEM₀, N₀ = fraction₀·N_tot.
    pub fn coupled_atoms(&self, total_atoms: f64) -> f64 {
        self.fundamental_fraction * total_atoms
    }

    pub fn total_atoms_for_coupled(&self, coupled: f64) -> f64 {
        coupled / self.fundamental_fraction
    }

    pub fn doppler_sigma(&self) -> f64 {
        self.doppler_sigma
    }

    /// Field at the active region for this operating point.
    pub fn active_field(&self, op: &OperatingPoint) -> Vec3 {
        let mut env = self.apparatus.field.clone();
        env.offset_field = op.b_offset;
        quadrupole_field(&env, &self.apparatus.active_position)
    }

    pub fn pump_beam(&self, op: &OperatingPoint) -> BeamGeometry {
        BeamGeometry {
            propagation: self.apparatus.pump_propagation,
            polarization: op.pump_polarization,
            power: op.pump_power,
            waist_radius: self.apparatus.pump_waist,
            detuning: op.pump_detuning,
        }
    }

    pub fn pump_saturation(&self, op: &OperatingPoint) -> Result<f64> {
        atomics::saturation_parameter(op.pump_power, self.apparatus.pump_waist, self.apparatus.green.saturation_intensity)
    }

    /// Gain of every configured family, in configuration order.
    pub fn gains(&self, op: &OperatingPoint) -> Result<Vec<GainBreakdown>> {
        let ctx = ChannelContext::new(self, op)?;
        Ok(self.families.iter().map(|f| ctx.breakdown(self, op, f)).collect())
    }

    /// Gain breakdown for transverse family `order`.
    pub fn mode_gain(&self, op: &OperatingPoint, order: u32) -> Result<GainBreakdown> {
        let ctx = ChannelContext::new(self, op)?;
        let family = match self.families.iter().find(|f| f.order == order) {
            Some(f) => *f,
            None => FamilyData {
                order,
                offset: geometry::transverse_mode_frequency(order.into(), &self.apparatus.cavity)?,
                coupling: geometry::family_coupling_factor(&self.apparatus.cloud, &self.apparatus.cavity, order),
            },
        };
        Ok(ctx.breakdown(self, op, &family))
    }

    pub(crate) fn family_data(&self) -> &[FamilyData] {
        &self.families
    }
}

/// Per-operating-point quantities shared by all families.
struct ChannelContext {
    /// ρ_ee·E_m for m = −1, 0, +1.
    pumped: [f64; 3],
    prefactor: f64,
}

impl ChannelContext {
    fn new(model: &GainModel, op: &OperatingPoint) -> Result<Self> {
        let app = &model.apparatus;
        let b = model.active_field(op);
        let b_dir = geometry::field_direction(&b)?;
        let weights = pump_excitation_weights(&model.pump_beam(op), &b)?;
        let s_pump = model.pump_saturation(op)?;
        let b_mag = b.norm();
        let mut pumped = [0.0; 3];
        for (slot, m) in pumped.iter_mut().zip(-1..=1) {
            let emission = cavity_emission_jones(m, &b_dir, &app.cavity.axis)?.strength;
            let w = weights.get(m);
            if w <= 0.0 || emission <= 0.0 {
                continue;
            }
            let shift = atomics::zeeman_shift(app.green.lande_g_upper, m, b_mag)?;
            let rho = atomics::excited_population(op.pump_detuning - shift, w * s_pump, app.green.linewidth, model.doppler_sigma)?;
            *slot = rho * emission;
        }
        if !(op.mot_saturation >= 0.0) || !(op.total_atoms >= 0.0) {
            return Err(Error::Domain("MOT saturation and atom number must be >= 0".into()));
        }
        let g_c = app.cavity.coupling;
        let prefactor = model.calibration.gain_scale * op.total_atoms * g_c * g_c * op.mot_saturation / app.blue.linewidth;
        Ok(Self { pumped, prefactor })
    }

    fn breakdown(&self, model: &GainModel, op: &OperatingPoint, family: &FamilyData) -> GainBreakdown {
        let app = &model.apparatus;
        let mismatch = op.cavity_detuning + family.offset - op.pump_detuning - op.mot_detuning - model.calibration.virtual_level_offset;
        let virtual_level = lorentzian(mismatch, ordinary(app.blue.linewidth));
        let common = self.prefactor * family.coupling * virtual_level;
        let channels = self.pumped.map(|p| common * p);
        let total = channels.iter().sum();
        GainBreakdown {
            order: family.order,
            channels,
            total,
            above_threshold: total >= app.cavity.kappa,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::angular;
    use approx::assert_relative_eq;

    fn model() -> GainModel {
        GainModel::new(Apparatus::default(), CalibrationConstants::uncalibrated()).unwrap()
    }

    #[test]
    fn resonance_condition() {
        assert_eq!(two_photon_resonance(5.0 * MHZ, -35.0 * MHZ), -30.0 * MHZ);
        assert_eq!(two_photon_resonance(-5.0 * MHZ, -35.0 * MHZ), -40.0 * MHZ);
        assert_eq!(two_photon_resonance(0.0, -35.0 * MHZ), -35.0 * MHZ);
        let shift = 3.25 * MHZ;
        assert_eq!(
            two_photon_resonance(2.0 * MHZ, -35.0 * MHZ + shift) - two_photon_resonance(2.0 * MHZ, -35.0 * MHZ),
            shift
        );
    }

    #[test]
    fn photon_budget() {
        let cav = CavityGeometry::default();
        let green = TransitionSpec::green_556();
        assert_eq!(output_power(0.0, &cav, &green).unwrap(), 0.0);
        // 0.05 · 6e5 · 2π·70e3 · (6.62607e-34 · 2.99792e8 / 556e-9)
        let p = output_power(6e5, &cav, &green).unwrap();
        assert_relative_eq!(p, 0.05 * 6e5 * angular(70e3) * 3.5727e-19, max_relative = 1e-4);
        assert!((p - 4.7e-9).abs() < 0.05e-9);
        assert_relative_eq!(output_power(1.2e6, &cav, &green).unwrap(), 2.0 * p, max_relative = 1e-15);
        assert!(output_power(-1.0, &cav, &green).is_err());
    }

    #[test]
    fn plus_channel_dominates_blue_lobe() {
        let g = model().mode_gain(&OperatingPoint::default(), 0).unwrap();
        assert!(g.channel(1) >= 10.0 * g.channel(-1));
        assert!(g.channel(1) >= 10.0 * g.channel(0));
        assert_eq!(g.total, g.channels.iter().sum::<f64>());
    }

    #[test]
    fn pi_pump_with_axial_field_gives_no_gain() {
        let op = OperatingPoint {
            pump_polarization: Jones::linear(0.0),
            pump_detuning: 0.0,
            cavity_detuning: -35.0 * MHZ,
            ..OperatingPoint::default()
        };
        for g in model().gains(&op).unwrap() {
            assert_eq!(g.total, 0.0);
        }
    }

    #[test]
    fn no_mot_light_no_gain() {
        let op = OperatingPoint {
            mot_saturation: 0.0,
            ..OperatingPoint::default()
        };
        assert_eq!(model().mode_gain(&op, 0).unwrap().total, 0.0);
    }

    #[test]
    fn zero_field_propagates_axis_error() {
        let op = OperatingPoint {
            b_offset: Vec3::zeros(),
            ..OperatingPoint::default()
        };
        assert!(matches!(model().mode_gain(&op, 0), Err(Error::QuantizationAxisUndefined)));
    }

    #[test]
    fn uncalibrated_gain_at_5000_coupled_atoms_is_order_kappa() {
        let m = model();
        let op = OperatingPoint {
            total_atoms: m.total_atoms_for_coupled(5000.0),
            ..OperatingPoint::default()
        };
        let ratio = m.mode_gain(&op, 0).unwrap().total / m.kappa();
        assert!((0.1..=10.0).contains(&ratio), "G/κ = {ratio}");
    }

    #[test]
    fn higher_families_are_detuned_on_the_ladder() {
        let m = model();
        let op = OperatingPoint::default();
        let g0 = m.mode_gain(&op, 0).unwrap().total;
        let g37 = m.mode_gain(&op, 37).unwrap().total;
        let shifted = OperatingPoint {
            cavity_detuning: op.cavity_detuning - 6.9 * MHZ,
            ..op.clone()
        };
        let g37_res = m.mode_gain(&shifted, 37).unwrap().total;
        assert!(g37 < g0);
        assert!(g37_res > g37);
        assert!(g37_res < g0);
    }
}
