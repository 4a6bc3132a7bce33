//! Steady state of the coupled photon-number rate equations
//!
//! dn_i/dt = (G_i / (1 + Σ_j β_ij n_j / n_sat) − κ)·n_i + G_i
//!
//! where β is the cross-saturation matrix of the families. The `+G_i` seed
//! keeps below-threshold photon numbers at their ASE value G/(κ − G).

use super::{output_power, GainModel, OperatingPoint};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyStateOptions {
    pub max_iterations: usize,
    /// Relative change per sweep below which the iteration stops.
    pub tolerance: f64,
}

impl Default for SteadyStateOptions {
    fn default() -> Self {
        Self {
            max_iterations: 10_000,
            tolerance: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilyState {
    pub order: u32,
    /// Unsaturated gain (1/s).
    pub gain: f64,
    pub photons: f64,
    /// Output power through one mirror (W).
    pub output_power: f64,
    /// Gain exceeds κ plus the cross-saturation imposed by the other
    /// families.
    pub lasing: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LaserSolution {
    pub families: Vec<FamilyState>,
    pub total_power: f64,
    pub iterations: usize,
    /// Largest relative residual of the fixed-point equations.
    pub residual: f64,
}

impl LaserSolution {
    pub fn lasing_orders(&self) -> Vec<u32> {
        self.families.iter().filter(|f| f.lasing).map(|f| f.order).collect()
    }

    pub fn family(&self, order: u32) -> Option<&FamilyState> {
        self.families.iter().find(|f| f.order == order)
    }
}

/// Positive root of κb·n² − (G(1+b) − κa)·n − G·a = 0, the fixed point of
/// one family with saturation denominator a + b·n.
fn single_family_root(gain: f64, kappa: f64, a: f64, b: f64) -> f64 {
    if gain <= 0.0 {
        return 0.0;
    }
    let lin = gain * (1.0 + b) - kappa * a;
    let disc = (lin * lin + 4.0 * kappa * b * gain * a).sqrt();
    if lin >= 0.0 {
        (lin + disc) / (2.0 * kappa * b)
    } else {
        2.0 * gain * a / (disc - lin)
    }
}

/// Solves the rate equations for given unsaturated gains.
pub fn solve_rate_equations(
    gains: &[f64],
    beta: &[Vec<f64>],
    kappa: f64,
    saturation_photons: f64,
    opts: &SteadyStateOptions,
) -> Result<(Vec<f64>, usize, f64)> {
    let k = gains.len();
    let mut n = vec![0.0; k];
    let mut iterations = 0;
    loop {
        iterations += 1;
        let damping = if iterations > opts.max_iterations / 2 { 0.5 } else { 1.0 };
        let mut change: f64 = 0.0;
        for i in 0..k {
            let cross: f64 = (0..k).filter(|&j| j != i).map(|j| beta[i][j] * n[j]).sum();
            let a = 1.0 + cross / saturation_photons;
            let b = beta[i][i] / saturation_photons;
            let target = single_family_root(gains[i], kappa, a, b);
            let next = n[i] + damping * (target - n[i]);
            if next > 0.0 {
                change = change.max((next - n[i]).abs() / next);
            }
            n[i] = next;
        }
        if change < opts.tolerance {
            let residual = residual(gains, beta, kappa, saturation_photons, &n);
            return Ok((n, iterations, residual));
        }
        if iterations >= opts.max_iterations {
            let residual = residual(gains, beta, kappa, saturation_photons, &n);
            return Err(Error::NonConvergence {
                iterations,
                residual,
                last: n,
            });
        }
    }
}

fn residual(gains: &[f64], beta: &[Vec<f64>], kappa: f64, n_sat: f64, n: &[f64]) -> f64 {
    (0..n.len())
        .filter(|&i| gains[i] > 0.0)
        .map(|i| {
            let s: f64 = (0..n.len()).map(|j| beta[i][j] * n[j]).sum::<f64>() / n_sat;
            let rate = (gains[i] / (1.0 + s) - kappa) * n[i] + gains[i];
            rate.abs() / (gains[i] + kappa * n[i])
        })
        .fold(0.0, f64::max)
}

impl GainModel {
    pub fn steady_state(&self, op: &OperatingPoint) -> Result<LaserSolution> {
        self.steady_state_with(op, &SteadyStateOptions::default())
    }

    pub fn steady_state_with(&self, op: &OperatingPoint, opts: &SteadyStateOptions) -> Result<LaserSolution> {
        let gains: Vec<f64> = self.gains(op)?.iter().map(|g| g.total).collect();
        self.solve_gains(&gains, opts)
    }

    /// Steady state for externally supplied family gains (configuration
    /// order).
    pub fn solve_gains(&self, gains: &[f64], opts: &SteadyStateOptions) -> Result<LaserSolution> {
        if gains.len() != self.family_data().len() {
            return Err(Error::Parameter("one gain per family required".into()));
        }
        let kappa = self.kappa();
        let n_sat = self.calibration().saturation_photons;
        let (photons, iterations, residual) = solve_rate_equations(gains, self.cross_saturation(), kappa, n_sat, opts)?;
        let app = self.apparatus();
        let beta = self.cross_saturation();
        let mut families = Vec::with_capacity(gains.len());
        let mut total_power = 0.0;
        for (i, fam) in self.family_data().iter().enumerate() {
            let cross: f64 = (0..gains.len()).filter(|&j| j != i).map(|j| beta[i][j] * photons[j]).sum();
            let power = output_power(photons[i], &app.cavity, &app.green)?;
            total_power += power;
            families.push(FamilyState {
                order: fam.order,
                gain: gains[i],
                photons: photons[i],
                output_power: power,
                lasing: gains[i] > kappa * (1.0 + cross / n_sat),
            });
        }
        Ok(LaserSolution {
            families,
            total_power,
            iterations,
            residual,
        })
    }
}
