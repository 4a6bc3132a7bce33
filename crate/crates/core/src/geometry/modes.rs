//! Transverse mode families of the cavity and their overlap with the cloud.
//!
//! A family TEM_N is the set of degenerate Hermite-Gauss modes TEM_{n,m}
//! with n + m = N. Its summed intensity is rotationally symmetric, so all
//! overlaps reduce to radial integrals. Coordinates are ξ = √2·ρ/w₀, in which
//! the TEM₀ intensity is e^{−ξ²} and every HG mode is L²-normalized.
//!
//! The cloud enters through its transverse marginal, a 2-D Gaussian of rms
//! radius σ. The mode is taken as uniform along the cavity axis over the
//! cloud (Rayleigh range ≫ cloud size).

use std::f64::consts::PI;

use crate::atomics::AtomEnsemble;
use crate::geometry::CavityGeometry;
use crate::{Error, Result};

/// Summed intensity of all HG modes with n + m = `order` at radius ξ.
///
/// Uses rotational symmetry to evaluate on the ξ-axis:
/// F_N(ξ) = Σ_n ψ_n(ξ)² ψ_{N−n}(0)².
pub fn family_intensity(order: u32, xi: f64) -> f64 {
    let n_max = order as usize;
    let psi = hermite_functions(n_max, xi);
    let mut total = 0.0;
    let mut c = 1.0 / PI.sqrt();
    // c_j = ψ_{2j}(0)², walking j = 0, 1, ... pairs with n = N − 2j.
    let mut j = 0usize;
    while 2 * j <= n_max {
        total += psi[n_max - 2 * j].powi(2) * c;
        j += 1;
        c *= (2 * j - 1) as f64 / (2 * j) as f64;
    }
    total
}

/// Normalized Hermite functions ψ_0..=ψ_n at x (∫ψ_k² dx = 1).
pub(crate) fn hermite_functions(n: usize, x: f64) -> Vec<f64> {
    let mut psi = Vec::with_capacity(n + 1);
    psi.push(PI.powf(-0.25) * (-0.5 * x * x).exp());
    if n >= 1 {
        psi.push(std::f64::consts::SQRT_2 * x * psi[0]);
    }
    for k in 1..n {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * x * psi[k] - (kf / (kf + 1.0)).sqrt() * psi[k - 1];
        psi.push(next);
    }
    psi
}

/// Peak of F_N over the plane.
fn family_peak(order: u32) -> f64 {
    if order == 0 {
        return 1.0 / PI;
    }
    let xi_max = (2.0 * order as f64 + 1.0).sqrt() + 3.0;
    let steps = (xi_max / 2e-3).ceil() as usize;
    (0..=steps)
        .map(|i| family_intensity(order, xi_max * i as f64 / steps as f64))
        .fold(0.0, f64::max)
}

/// Radial quadrature against the cloud density, in ξ units.
struct CloudQuadrature {
    xi: Vec<f64>,
    /// Simpson weight × 2πξ × cloud density.
    weight: Vec<f64>,
}

impl CloudQuadrature {
    fn new(cloud_sigma_xi: f64, max_order: u32) -> Self {
        let mode_extent = (2.0 * max_order as f64 + 1.0).sqrt() + 10.0;
        let xi_max = mode_extent.min(12.0 * cloud_sigma_xi);
        let h_target = (5e-3_f64).min(cloud_sigma_xi / 50.0);
        let mut steps = (xi_max / h_target).ceil() as usize;
        steps += steps % 2;
        let h = xi_max / steps as f64;
        let norm = 1.0 / (2.0 * PI * cloud_sigma_xi * cloud_sigma_xi);
        let mut xi = Vec::with_capacity(steps + 1);
        let mut weight = Vec::with_capacity(steps + 1);
        for i in 0..=steps {
            let x = h * i as f64;
            let simpson = if i == 0 || i == steps {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            let density = norm * (-0.5 * x * x / (cloud_sigma_xi * cloud_sigma_xi)).exp();
            xi.push(x);
            weight.push(simpson * h / 3.0 * 2.0 * PI * x * density);
        }
        Self { xi, weight }
    }

    fn integrate(&self, f: impl Fn(usize, f64) -> f64) -> f64 {
        self.xi
            .iter()
            .zip(&self.weight)
            .enumerate()
            .map(|(i, (x, w))| w * f(i, *x))
            .sum()
    }
}

fn cloud_sigma_xi(ensemble: &AtomEnsemble, cavity: &CavityGeometry) -> f64 {
    std::f64::consts::SQRT_2 * ensemble.cloud_radius_rms / cavity.waist_radius
}

/// Tabulated intensity of one family on the cloud quadrature grid.
#[derive(Debug, Clone)]
pub struct FamilyProfile {
    pub order: u32,
    /// max F_N.
    pub peak: f64,
    values: Vec<f64>,
}

impl FamilyProfile {
    fn tabulate(order: u32, quad: &CloudQuadrature) -> Self {
        Self {
            order,
            peak: family_peak(order),
            values: quad.xi.iter().map(|&x| family_intensity(order, x)).collect(),
        }
    }

    /// Intensity per photon relative to the TEM₀ antinode: the family's
    /// photons are shared equally among its N + 1 degenerate modes.
    fn per_photon(&self, i: usize) -> f64 {
        self.values[i] / ((self.order as f64 + 1.0) / PI)
    }
}

/// Fraction of the cloud coupled to family N: ∫ n(r) I_N(r)/I_N,max.
pub fn mode_overlap_fraction(ensemble: &AtomEnsemble, cavity: &CavityGeometry, order: u32) -> f64 {
    let quad = CloudQuadrature::new(cloud_sigma_xi(ensemble, cavity), order);
    let profile = FamilyProfile::tabulate(order, &quad);
    quad.integrate(|i, _| profile.values[i]) / profile.peak
}

/// Collective coupling of family N relative to N_total·g_c².
///
/// Equals mode_overlap_fraction(N)·(g_N/g_c)², where g_N² = g_c²·I_N,max /
/// ((N+1)·I_0,max) is the antinode coupling of one family photon.
pub fn family_coupling_factor(ensemble: &AtomEnsemble, cavity: &CavityGeometry, order: u32) -> f64 {
    let quad = CloudQuadrature::new(cloud_sigma_xi(ensemble, cavity), order);
    let profile = FamilyProfile::tabulate(order, &quad);
    quad.integrate(|i, _| profile.per_photon(i))
}

/// Spatial-hole-burning matrix β_ij: how strongly photons of family j
/// saturate the gain of family i, normalized so that β_00 = 1.
///
/// β_ij = ⟨φ_j⟩_i / ⟨φ_0⟩_0 where ⟨φ_j⟩_i is the per-photon intensity of
/// family j averaged over the gain distribution n(r)·I_i(r) of family i.
pub fn cross_saturation(ensemble: &AtomEnsemble, cavity: &CavityGeometry, orders: &[u32]) -> Vec<Vec<f64>> {
    let max_order = orders.iter().copied().max().unwrap_or(0);
    let quad = CloudQuadrature::new(cloud_sigma_xi(ensemble, cavity), max_order);
    let reference = FamilyProfile::tabulate(0, &quad);
    let profiles: Vec<FamilyProfile> = orders.iter().map(|&n| FamilyProfile::tabulate(n, &quad)).collect();
    let mean_per_photon = |gain: &FamilyProfile, sat: &FamilyProfile| {
        quad.integrate(|i, _| gain.values[i] * sat.per_photon(i)) / quad.integrate(|i, _| gain.values[i])
    };
    let norm = mean_per_photon(&reference, &reference);
    profiles
        .iter()
        .map(|gi| profiles.iter().map(|sj| mean_per_photon(gi, sj) / norm).collect())
        .collect()
}

/// Frequency of family N above TEM₀ on the linear family ladder (Hz).
pub fn transverse_mode_frequency(order: i64, cavity: &CavityGeometry) -> Result<f64> {
    if order < 0 {
        return Err(Error::Domain(format!("transverse order must be >= 0, got {order}")));
    }
    Ok(order as f64 / cavity.family_step as f64 * cavity.family_spacing)
}
