//! Spatial and polarization layer.
//!
//! Lab frame: the cavity axis is x̂ (horizontal), the pump beam and the MOT
//! coil axis are vertical (ẑ), and ŷ = ẑ × x̂ completes a right-handed frame.
//!
//! Cavity output polarization is expressed in the transverse basis
//! H = ŷ (horizontal), V = ẑ (vertical), looking along +x̂. Handedness:
//!
//! | label | Jones (H, V) | field rotation about +x̂ |
//! |-------|--------------|--------------------------|
//! | L     | (1, +i)/√2   | H → V (positive helicity) |
//! | R     | (1, −i)/√2   | V → H (negative helicity) |
//!
//! With B ∥ +x̂ this assigns L to σ⁺ and R to σ⁻ emission.

mod modes;

pub use modes::{
    cross_saturation, family_coupling_factor, family_intensity, mode_overlap_fraction,
    transverse_mode_frequency, FamilyProfile,
};

use nalgebra::Vector3;
use num_complex::Complex64;

use crate::units::angular;
use crate::{Error, Result};

pub type Vec3 = Vector3<f64>;
pub type CVec3 = Vector3<Complex64>;

const FIELD_EPS: f64 = 1e-12;
const STRENGTH_EPS: f64 = 1e-12;

/// Fixed lab axes.
pub struct LabFrame;

impl LabFrame {
    pub fn cavity_axis() -> Vec3 {
        Vec3::x()
    }
    pub fn vertical() -> Vec3 {
        Vec3::z()
    }
    pub fn horizontal_transverse() -> Vec3 {
        Vec3::z().cross(&Vec3::x())
    }
}

/// Quadrupole field of the MOT coils plus a uniform offset.
#[derive(Debug, Clone, PartialEq)]
pub struct MagneticEnvironment {
    /// Radial gradient b′ in G/m. The axial (coil-axis) gradient is 2b′.
    pub radial_gradient: f64,
    /// Uniform offset field (G).
    pub offset_field: Vec3,
}

impl MagneticEnvironment {
    /// Builds the environment from the axial gradient, the number usually
    /// quoted for a MOT.
    pub fn from_axial_gradient(axial_g_per_cm: f64, offset_field: Vec3) -> Result<Self> {
        if !(axial_g_per_cm >= 0.0) {
            return Err(Error::Domain(format!("gradient must be >= 0, got {axial_g_per_cm}")));
        }
        Ok(Self {
            radial_gradient: 0.5 * axial_g_per_cm * 100.0,
            offset_field,
        })
    }
}

impl Default for MagneticEnvironment {
    fn default() -> Self {
        Self::from_axial_gradient(36.0, Vec3::new(2.38, 0.0, 0.0)).expect("valid defaults")
    }
}

/// B = b′·(x, y, −2z) + B_offset, position in metres, result in gauss.
pub fn quadrupole_field(env: &MagneticEnvironment, position: &Vec3) -> Vec3 {
    env.radial_gradient * Vec3::new(position.x, position.y, -2.0 * position.z) + env.offset_field
}

/// Unit vector along B, or the quantization-axis error for a vanishing field.
pub fn field_direction(b: &Vec3) -> Result<Vec3> {
    let norm = b.norm();
    if !(norm > FIELD_EPS) {
        return Err(Error::QuantizationAxisUndefined);
    }
    Ok(b / norm)
}

/// Jones vector of a beam in the transverse basis returned by
/// [`transverse_basis`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jones(pub [Complex64; 2]);

impl Jones {
    pub fn new(a: Complex64, b: Complex64) -> Result<Self> {
        let norm = (a.norm_sqr() + b.norm_sqr()).sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::Domain("Jones vector must be nonzero".into()));
        }
        Ok(Self([a / norm, b / norm]))
    }

    /// Linear polarization at `degrees` from the first basis vector.
    pub fn linear(degrees: f64) -> Self {
        let t = degrees.to_radians();
        Self([Complex64::new(t.cos(), 0.0), Complex64::new(t.sin(), 0.0)])
    }

    /// Circular polarization; `positive` rotates from the first basis vector
    /// toward the second.
    pub fn circular(positive: bool) -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let sign = if positive { 1.0 } else { -1.0 };
        Self([Complex64::new(s, 0.0), Complex64::new(0.0, sign * s)])
    }
}

/// Transverse basis (e₁, e₂) for light propagating along `k`: e₁ is the
/// projection of the cavity axis x̂ (or ŷ when k ∥ x̂), e₂ = k × e₁. For a
/// vertical beam this is (x̂, ŷ), so pump polarization angles are measured
/// from the cavity axis.
pub fn transverse_basis(k: &Vec3) -> (Vec3, Vec3) {
    let k = k.normalize();
    let mut reference = Vec3::x();
    if (reference - reference.dot(&k) * k).norm() < 1e-9 {
        reference = Vec3::y();
    }
    let e1 = (reference - reference.dot(&k) * k).normalize();
    let e2 = k.cross(&e1);
    (e1, e2)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamGeometry {
    pub propagation: Vec3,
    pub polarization: Jones,
    /// Power (W).
    pub power: f64,
    /// 1/e² intensity radius (m).
    pub waist_radius: f64,
    /// Detuning from the atomic resonance (Hz).
    pub detuning: f64,
}

impl BeamGeometry {
    /// Vertical pump with the default 7 mW, 2.4 mm beam.
    pub fn pump(polarization: Jones, detuning: f64) -> Self {
        Self {
            propagation: LabFrame::vertical(),
            polarization,
            power: 7e-3,
            waist_radius: 2.4e-3,
            detuning,
        }
    }

    /// Complex polarization vector in the lab frame.
    pub fn polarization_vector(&self) -> CVec3 {
        let (e1, e2) = transverse_basis(&self.propagation);
        let [a, b] = self.polarization.0;
        e1.map(Complex64::from) * a + e2.map(Complex64::from) * b
    }
}

/// Orthonormal pair spanning the plane ⊥ `axis`, with e₁ × e₂ = axis.
fn perpendicular_pair(axis: &Vec3) -> (Vec3, Vec3) {
    let abs = axis.abs();
    let helper = if abs.x <= abs.y && abs.x <= abs.z {
        Vec3::x()
    } else if abs.y <= abs.z {
        Vec3::y()
    } else {
        Vec3::z()
    };
    let e1 = (helper - helper.dot(axis) * axis).normalize();
    let e2 = axis.cross(&e1);
    (e1, e2)
}

/// Spherical unit vector for Δm = `m` about `axis` (m = 0 is the axis
/// itself, ±1 rotate with ±helicity). Global phase is arbitrary.
fn spherical_vector(m: i32, axis: &Vec3) -> CVec3 {
    let c = |v: Vec3| v.map(Complex64::from);
    match m {
        0 => c(*axis),
        _ => {
            let (e1, e2) = perpendicular_pair(axis);
            let sign = f64::from(m.signum());
            (c(e1) + c(e2) * Complex64::new(0.0, sign)) * Complex64::from(std::f64::consts::FRAC_1_SQRT_2)
        }
    }
}

/// Relative drive of the σ⁻, π and σ⁺ transitions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExcitationWeights {
    pub minus: f64,
    pub pi: f64,
    pub plus: f64,
}

impl ExcitationWeights {
    pub fn get(&self, m: i32) -> f64 {
        match m {
            -1 => self.minus,
            0 => self.pi,
            1 => self.plus,
            _ => 0.0,
        }
    }

    pub fn sum(&self) -> f64 {
        self.minus + self.pi + self.plus
    }
}

/// Decomposes the pump polarization in the spherical basis about B̂.
/// w_m = |ê_m* · ε|², which sums to one for a normalized ε.
pub fn pump_excitation_weights(pump: &BeamGeometry, b_field: &Vec3) -> Result<ExcitationWeights> {
    let b_dir = field_direction(b_field)?;
    let eps = pump.polarization_vector();
    let weight = |m: i32| {
        let e = spherical_vector(m, &b_dir);
        e.iter().zip(eps.iter()).map(|(ei, xi)| ei.conj() * xi).sum::<Complex64>().norm_sqr()
    };
    Ok(ExcitationWeights {
        minus: weight(-1),
        pi: weight(0),
        plus: weight(1),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolarizationLabel {
    H,
    V,
    R,
    L,
    /// Linear at the given angle (degrees) from H toward V.
    Linear(f64),
    /// General elliptical light; `helicity` is the normalized S₃.
    Elliptical { orientation: f64, helicity: f64 },
    None,
}

impl PolarizationLabel {
    /// Classifies a (H, V) Jones vector. Zero vectors map to `None`.
    pub fn classify(h: Complex64, v: Complex64) -> Self {
        let intensity = h.norm_sqr() + v.norm_sqr();
        if intensity < STRENGTH_EPS {
            return Self::None;
        }
        let s1 = (h.norm_sqr() - v.norm_sqr()) / intensity;
        let cross = h.conj() * v;
        let s2 = 2.0 * cross.re / intensity;
        let s3 = 2.0 * cross.im / intensity;
        let tol = 1e-9;
        if s3 > 1.0 - tol {
            Self::L
        } else if s3 < -1.0 + tol {
            Self::R
        } else {
            let orientation = 0.5 * s2.atan2(s1).to_degrees();
            if s3.abs() > tol {
                Self::Elliptical { orientation, helicity: s3 }
            } else if orientation.abs() < 1e-6 {
                Self::H
            } else if (orientation.abs() - 90.0).abs() < 1e-6 {
                Self::V
            } else {
                Self::Linear(orientation)
            }
        }
    }

    /// Short label for tables.
    pub fn short(&self) -> String {
        match self {
            Self::H => "H".into(),
            Self::V => "V".into(),
            Self::R => "R".into(),
            Self::L => "L".into(),
            Self::Linear(a) => format!("lin({a:.1})"),
            Self::Elliptical { orientation, helicity } => format!("ell({orientation:.1},{helicity:+.2})"),
            Self::None => "---".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Emission {
    pub label: PolarizationLabel,
    /// Radiated intensity along the cavity axis relative to the maximum of a
    /// unit dipole: sin²θ for π, (1 + cos²θ)/2 for σ±.
    pub strength: f64,
    /// Jones vector (H, V) of the emitted field, unnormalized.
    pub jones: [Complex64; 2],
}

/// Polarization and strength of dipole emission on transition `m` → ground
/// into the cavity mode along `cavity_axis`.
pub fn cavity_emission_jones(m: i32, b_dir: &Vec3, cavity_axis: &Vec3) -> Result<Emission> {
    if m.abs() > 1 {
        return Err(Error::Domain(format!("sublevel m = {m} outside J = 1 manifold")));
    }
    let b_dir = field_direction(b_dir)?;
    let k = cavity_axis.normalize();
    let dipole = spherical_vector(m, &b_dir);
    let mut h_axis = LabFrame::vertical().cross(&k);
    if h_axis.norm() < 1e-9 {
        h_axis = LabFrame::horizontal_transverse();
    }
    let h_axis = h_axis.normalize();
    let v_axis = k.cross(&h_axis);
    let project = |axis: &Vec3| dipole.iter().zip(axis.iter()).map(|(d, a)| d * *a).sum::<Complex64>();
    let jones = [project(&h_axis), project(&v_axis)];
    let strength = jones[0].norm_sqr() + jones[1].norm_sqr();
    let label = if strength < STRENGTH_EPS {
        PolarizationLabel::None
    } else {
        PolarizationLabel::classify(jones[0], jones[1])
    };
    Ok(Emission { label, strength, jones })
}

/// Which σ⁻/π/σ⁺ transitions a vertical pump drives for a given field, and
/// the polarization each of them emits into the cavity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionRow {
    /// Indexed by m + 1.
    pub excited: [bool; 3],
    /// `None` where the transition is not driven or does not radiate along
    /// the cavity axis.
    pub output: [PolarizationLabel; 3],
}

const EXCITATION_EPS: f64 = 1e-9;

pub fn selection_rules(b_field: &Vec3, pump: &Jones, cavity_axis: &Vec3) -> Result<SelectionRow> {
    let b_dir = field_direction(b_field)?;
    let weights = pump_excitation_weights(&BeamGeometry::pump(*pump, 0.0), b_field)?;
    let mut excited = [false; 3];
    let mut output = [PolarizationLabel::None; 3];
    for m in -1..=1 {
        let i = (m + 1) as usize;
        excited[i] = weights.get(m) > EXCITATION_EPS;
        if excited[i] {
            output[i] = cavity_emission_jones(m, &b_dir, cavity_axis)?.label;
        }
    }
    Ok(SelectionRow { excited, output })
}

/// Fabry-Perot cavity parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct CavityGeometry {
    pub axis: Vec3,
    /// Mode waist w₀ (m).
    pub waist_radius: f64,
    /// Mirror spacing (m).
    pub length: f64,
    /// Energy decay rate κ (rad/s).
    pub kappa: f64,
    /// Single-atom coupling g_c at the TEM₀ antinode (rad/s).
    pub coupling: f64,
    /// Fraction of the dissipated power leaving through the output mirror.
    pub output_fraction: f64,
    /// Frequency step between successive lasing families (Hz).
    pub family_spacing: f64,
    /// Transverse order step between successive lasing families.
    pub family_step: u32,
}

impl CavityGeometry {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.waist_radius, self.length, self.kappa, self.coupling, self.family_spacing];
        if positive.iter().any(|v| !(*v > 0.0)) || self.family_step == 0 {
            return Err(Error::Domain("cavity parameters must be positive".into()));
        }
        if !(self.output_fraction > 0.0 && self.output_fraction <= 1.0) {
            return Err(Error::Domain(format!("output fraction {} not in (0, 1]", self.output_fraction)));
        }
        Ok(())
    }

    /// Single-atom cooperativity 4g²/(κΓ).
    pub fn cooperativity(&self, atomic_linewidth: f64) -> f64 {
        4.0 * self.coupling * self.coupling / (self.kappa * atomic_linewidth)
    }

    pub fn free_spectral_range(&self) -> f64 {
        crate::units::SPEED_OF_LIGHT / (2.0 * self.length)
    }
}

impl Default for CavityGeometry {
    fn default() -> Self {
        Self {
            axis: LabFrame::cavity_axis(),
            waist_radius: 90e-6,
            length: 4.78e-2,
            kappa: angular(70e3),
            coupling: angular(30e3),
            output_fraction: 0.05,
            family_spacing: 6.9e6,
            family_step: 37,
        }
    }
}
