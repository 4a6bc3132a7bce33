use super::{GainModel, OperatingPoint};
use crate::numerics::bisect;
use crate::{Error, Result};

/// Quantity varied when searching for the threshold G = κ.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdVariable {
    /// Atoms coupled to TEM₀ (N₀ = fraction₀ · N_tot).
    CoupledAtoms,
    /// Pump power (W).
    PumpPower,
}

impl ThresholdVariable {
    fn limits(self) -> (f64, f64) {
        match self {
            Self::CoupledAtoms => (1e3, 1e12),
            Self::PumpPower => (1e-4, 100.0),
        }
    }
}

const THRESHOLD_TOL: f64 = 1e-12;

impl GainModel {
    /// Operating point with the varied quantity set to `x`.
    pub fn apply_variable(&self, op: &OperatingPoint, var: ThresholdVariable, x: f64) -> OperatingPoint {
        let mut op = op.clone();
        match var {
            ThresholdVariable::CoupledAtoms => op.total_atoms = self.total_atoms_for_coupled(x),
            ThresholdVariable::PumpPower => op.pump_power = x,
        }
        op
    }

    /// Threshold of family `order` by bisection on G(x) = κ with bracket
    /// expansion. The gain is monotone increasing in both variables.
    pub fn threshold(&self, var: ThresholdVariable, op: &OperatingPoint, order: u32) -> Result<f64> {
        let kappa = self.kappa();
        let excess = |x: f64| -> Result<f64> { Ok(self.mode_gain(&self.apply_variable(op, var, x), order)?.total - kappa) };
        let (mut hi, limit) = var.limits();
        while excess(hi)? < 0.0 {
            if hi >= limit {
                return Err(Error::NoThreshold { lo: 0.0, hi: limit });
            }
            hi = (hi * 4.0).min(limit);
        }
        // G is evaluated once more per step; errors have already surfaced above.
        let f = |x: f64| excess(x).unwrap_or(f64::NAN);
        bisect(0.0, hi, THRESHOLD_TOL, f).ok_or(Error::NoThreshold { lo: 0.0, hi })
    }

    /// Thresholds of every configured family, `None` where out of range.
    pub fn family_thresholds(&self, var: ThresholdVariable, op: &OperatingPoint) -> Result<Vec<(u32, Option<f64>)>> {
        self.families()
            .into_iter()
            .map(|order| match self.threshold(var, op, order) {
                Ok(x) => Ok((order, Some(x))),
                Err(Error::NoThreshold { .. }) => Ok((order, None)),
                Err(e) => Err(e),
            })
            .collect()
    }
}
