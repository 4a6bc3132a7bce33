//! Detuning maps and optimum tracking.

use rayon::prelude::*;

use super::{GainModel, OperatingPoint};
use crate::numerics::{golden_max, linear_fit, LinearFit};
use crate::{Error, Result};

/// Inclusive, evenly stepped range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanAxis {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl ScanAxis {
    pub fn new(start: f64, stop: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || !start.is_finite() || !stop.is_finite() || stop < start {
            return Err(Error::Parameter(format!("invalid scan axis {start}..{stop} step {step}")));
        }
        Ok(Self { start, stop, step })
    }

    pub fn len(&self) -> usize {
        ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Grid values computed as start + i·step so they do not accumulate
    /// rounding.
    pub fn values(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.start + i as f64 * self.step).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapCell {
    pub pump_detuning: f64,
    pub cavity_detuning: f64,
    /// Total output power; `None` where the solver failed.
    pub power: Option<f64>,
    /// Per-family output power in model family order.
    pub family_powers: Option<Vec<f64>>,
    pub lasing: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lobe {
    pub cells: usize,
    pub peak_pump: f64,
    pub peak_cavity: f64,
    pub peak_power: f64,
    /// Full width at half maximum of the power along δ_c through the peak.
    pub cavity_fwhm: Option<f64>,
}

/// Output power on a (pump detuning × cavity detuning) grid, stored with
/// the pump detuning as the slow index.
#[derive(Debug, Clone, PartialEq)]
pub struct DetuningMap {
    pub pump: Vec<f64>,
    pub cavity: Vec<f64>,
    pub orders: Vec<u32>,
    pub cells: Vec<MapCell>,
}

impl DetuningMap {
    pub fn cell(&self, pump_index: usize, cavity_index: usize) -> &MapCell {
        &self.cells[pump_index * self.cavity.len() + cavity_index]
    }

    /// 4-connected regions of lasing cells, brightest first.
    pub fn lobes(&self) -> Vec<Lobe> {
        let (rows, cols) = (self.pump.len(), self.cavity.len());
        let mut label = vec![usize::MAX; rows * cols];
        let mut lobes = Vec::new();
        for start in 0..rows * cols {
            if !self.cells[start].lasing || label[start] != usize::MAX {
                continue;
            }
            let id = lobes.len();
            let mut stack = vec![start];
            label[start] = id;
            let mut count = 0;
            let mut best = start;
            while let Some(idx) = stack.pop() {
                count += 1;
                if self.cells[idx].power > self.cells[best].power {
                    best = idx;
                }
                let (r, c) = (idx / cols, idx % cols);
                let mut visit = |r: usize, c: usize| {
                    let j = r * cols + c;
                    if self.cells[j].lasing && label[j] == usize::MAX {
                        label[j] = id;
                        stack.push(j);
                    }
                };
                if r > 0 {
                    visit(r - 1, c);
                }
                if r + 1 < rows {
                    visit(r + 1, c);
                }
                if c > 0 {
                    visit(r, c - 1);
                }
                if c + 1 < cols {
                    visit(r, c + 1);
                }
            }
            let peak = &self.cells[best];
            lobes.push(Lobe {
                cells: count,
                peak_pump: peak.pump_detuning,
                peak_cavity: peak.cavity_detuning,
                peak_power: peak.power.unwrap_or(0.0),
                cavity_fwhm: self.row_fwhm(best / cols, best % cols),
            });
        }
        lobes.sort_by(|a, b| b.peak_power.total_cmp(&a.peak_power));
        lobes
    }

    /// Half-maximum width along the cavity axis, linearly interpolated.
    /// `None` if the row does not fall below half maximum on both sides.
    fn row_fwhm(&self, row: usize, peak: usize) -> Option<f64> {
        let power = |c: usize| self.cell(row, c).power.unwrap_or(0.0);
        let half = 0.5 * power(peak);
        let crossing = |inside: usize, outside: usize| {
            let (pi, po) = (power(inside), power(outside));
            let t = (pi - half) / (pi - po);
            self.cavity[inside] + t * (self.cavity[outside] - self.cavity[inside])
        };
        let left = (0..peak).rev().find(|&c| power(c) < half).map(|c| crossing(c + 1, c))?;
        let right = (peak + 1..self.cavity.len()).find(|&c| power(c) < half).map(|c| crossing(c - 1, c))?;
        Some(right - left)
    }
}

/// Steady-state power over a detuning grid. Solver failures become
/// missing cells; only invalid model input aborts the scan.
pub fn detuning_map(model: &GainModel, template: &OperatingPoint, pump: &ScanAxis, cavity: &ScanAxis) -> Result<DetuningMap> {
    // Surface configuration errors (zero field, bad atom number) once.
    model.gains(template)?;
    let pump_values = pump.values();
    let cavity_values = cavity.values();
    let cells = pump_values
        .par_iter()
        .flat_map_iter(|&p| cavity_values.iter().map(move |&c| (p, c)))
        .map(|(p, c)| {
            let op = OperatingPoint {
                pump_detuning: p,
                cavity_detuning: c,
                ..template.clone()
            };
            match model.steady_state(&op) {
                Ok(sol) => MapCell {
                    pump_detuning: p,
                    cavity_detuning: c,
                    power: Some(sol.total_power),
                    family_powers: Some(sol.families.iter().map(|f| f.output_power).collect()),
                    lasing: sol.families.iter().any(|f| f.lasing),
                },
                Err(_) => MapCell {
                    pump_detuning: p,
                    cavity_detuning: c,
                    power: None,
                    family_powers: None,
                    lasing: false,
                },
            }
        })
        .collect();
    Ok(DetuningMap {
        pump: pump_values,
        cavity: cavity_values,
        orders: model.families(),
        cells,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanVariable {
    /// Magnitude of the offset field (G) along the template's direction.
    BOffset,
    /// MOT beam detuning (Hz).
    MotDetuning,
}

/// Search window for the power maximum at each scan value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimumSearch {
    pub pump: ScanAxis,
    pub cavity: ScanAxis,
    /// Convergence of the coordinate refinement (Hz).
    pub tolerance: f64,
}

impl Default for OptimumSearch {
    fn default() -> Self {
        use crate::units::MHZ;
        Self {
            pump: ScanAxis::new(0.0, 20.0 * MHZ, 0.5 * MHZ).expect("static axis"),
            cavity: ScanAxis::new(-60.0 * MHZ, 0.0, 1.0 * MHZ).expect("static axis"),
            tolerance: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Optimum {
    pub x: f64,
    pub pump_detuning: f64,
    pub cavity_detuning: f64,
    pub power: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimumScan {
    pub variable: ScanVariable,
    pub optima: Vec<Optimum>,
    /// Scan values with no lasing anywhere in the window.
    pub missing: Vec<f64>,
    /// δ_p,opt against x.
    pub pump_fit: Option<LinearFit>,
    /// δ_c,opt against x.
    pub cavity_fit: Option<LinearFit>,
}

fn with_variable(template: &OperatingPoint, var: ScanVariable, x: f64) -> Result<OperatingPoint> {
    let mut op = template.clone();
    match var {
        ScanVariable::BOffset => {
            let norm = template.b_offset.norm();
            if norm == 0.0 {
                return Err(Error::QuantizationAxisUndefined);
            }
            op.b_offset = template.b_offset * (x / norm);
        }
        ScanVariable::MotDetuning => op.mot_detuning = x,
    }
    Ok(op)
}

fn power_at(model: &GainModel, op: &OperatingPoint, p: f64, c: f64) -> Option<(f64, bool)> {
    let op = OperatingPoint {
        pump_detuning: p,
        cavity_detuning: c,
        ..op.clone()
    };
    let sol = model.steady_state(&op).ok()?;
    Some((sol.total_power, sol.families.iter().any(|f| f.lasing)))
}

/// Coarse grid search followed by alternating golden-section refinement.
fn locate_optimum(model: &GainModel, op: &OperatingPoint, search: &OptimumSearch) -> Option<(f64, f64, f64)> {
    let mut best: Option<(f64, f64, f64)> = None;
    let mut any_lasing = false;
    for p in search.pump.values() {
        for c in search.cavity.values() {
            if let Some((power, lasing)) = power_at(model, op, p, c) {
                any_lasing |= lasing;
                if best.is_none_or(|b| power > b.2) {
                    best = Some((p, c, power));
                }
            }
        }
    }
    if !any_lasing {
        return None;
    }
    let (mut p, mut c, _) = best?;
    let objective = |p: f64, c: f64| power_at(model, op, p, c).map_or(f64::NEG_INFINITY, |r| r.0);
    for _ in 0..100 {
        let (p_new, _) = golden_max(p - search.pump.step, p + search.pump.step, search.tolerance, |x| objective(x, c));
        let (c_new, _) = golden_max(c - search.cavity.step, c + search.cavity.step, search.tolerance, |x| objective(p_new, x));
        let moved = (p_new - p).abs().max((c_new - c).abs());
        p = p_new;
        c = c_new;
        if moved < search.tolerance {
            break;
        }
    }
    Some((p, c, objective(p, c)))
}

/// Tracks the power maximum while varying `var` over `values`, and fits
/// both optimum detunings linearly against it.
pub fn optimum_scan(
    model: &GainModel,
    template: &OperatingPoint,
    var: ScanVariable,
    values: &[f64],
    search: &OptimumSearch,
) -> Result<OptimumScan> {
    let ops = values.iter().map(|&x| with_variable(template, var, x)).collect::<Result<Vec<_>>>()?;
    for op in &ops {
        model.gains(op)?;
    }
    let found: Vec<Option<(f64, f64, f64)>> = ops.par_iter().map(|op| locate_optimum(model, op, search)).collect();
    let mut optima = Vec::new();
    let mut missing = Vec::new();
    for (&x, r) in values.iter().zip(found) {
        match r {
            Some((p, c, power)) => optima.push(Optimum {
                x,
                pump_detuning: p,
                cavity_detuning: c,
                power,
            }),
            None => missing.push(x),
        }
    }
    let xs: Vec<f64> = optima.iter().map(|o| o.x).collect();
    let fit = |ys: Vec<f64>| if xs.len() >= 2 { linear_fit(&xs, &ys).ok() } else { None };
    let pump_fit = fit(optima.iter().map(|o| o.pump_detuning).collect());
    let cavity_fit = fit(optima.iter().map(|o| o.cavity_detuning).collect());
    Ok(OptimumScan {
        variable: var,
        optima,
        missing,
        pump_fit,
        cavity_fit,
    })
}
