//! Photon-counting layer: intensity traces, detector clicks and g²(τ).

mod clicks;
mod correlate;

pub use clicks::{poissonize, ClickStream};
pub use correlate::{
    binning_washout, g2_auto, g2_cross, g2_cross_serial, thermal_g2_bin, washout_coherence_time, CorrelationResult,
};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::rng::{self, Domain};
use crate::{Error, Result};

/// Default relative rms intensity ripple of the laser regime.
pub const DEFAULT_RIPPLE: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// Single-mode chaotic light, |α|² of a complex Ornstein-Uhlenbeck field.
    Thermal,
    /// Stabilized intensity with a slow Ornstein-Uhlenbeck ripple.
    Laser,
    /// Constant rate.
    Poisson,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Self::Thermal => "thermal",
            Self::Laser => "laser",
            Self::Poisson => "poisson",
        }
    }
}

impl std::str::FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "thermal" => Ok(Self::Thermal),
            "laser" => Ok(Self::Laser),
            "poisson" => Ok(Self::Poisson),
            _ => Err(Error::Parameter(format!("unknown regime {s:?} (thermal, laser, poisson)"))),
        }
    }
}

/// What to simulate. All times in seconds, rates in counts/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSpec {
    pub regime: Regime,
    pub mean_rate: f64,
    /// Intensity correlation time (thermal) or ripple correlation time
    /// (laser). Unused for Poisson light.
    pub coherence_time: f64,
    pub duration: f64,
    pub sample_period: f64,
    /// Relative rms ripple of the laser regime.
    pub ripple: f64,
}

impl TraceSpec {
    pub fn new(regime: Regime, mean_rate: f64, coherence_time: f64, duration: f64, sample_period: f64) -> Self {
        Self {
            regime,
            mean_rate,
            coherence_time,
            duration,
            sample_period,
            ripple: DEFAULT_RIPPLE,
        }
    }

    pub fn samples(&self) -> usize {
        (self.duration / self.sample_period).floor() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64, name: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Parameter(format!("{name} must be positive, got {v}")))
            }
        };
        positive(self.mean_rate, "mean_rate")?;
        positive(self.duration, "duration")?;
        positive(self.sample_period, "sample_period")?;
        if self.samples() == 0 {
            return Err(Error::Parameter("duration shorter than one sample".into()));
        }
        if !(self.ripple >= 0.0) {
            return Err(Error::Parameter("ripple must be >= 0".into()));
        }
        if self.regime != Regime::Poisson {
            positive(self.coherence_time, "coherence_time")?;
            if self.duration < 100.0 * self.coherence_time {
                return Err(Error::Parameter(format!(
                    "duration {:e} s shorter than 100 coherence times ({:e} s)",
                    self.duration, self.coherence_time
                )));
            }
        }
        if self.regime == Regime::Thermal && self.sample_period > self.coherence_time / 10.0 {
            return Err(Error::Parameter(format!(
                "sample_period {:e} s undersamples coherence time {:e} s (needs <= tau_c/10)",
                self.sample_period, self.coherence_time
            )));
        }
        Ok(())
    }
}

/// Piecewise-constant detection rate.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityTrace {
    pub regime: Regime,
    pub sample_period: f64,
    /// Rate in counts/s during each sample, all ≥ 0.
    pub samples: Vec<f64>,
}

impl IntensityTrace {
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 * self.sample_period
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }
}

/// Synthesizes an intensity trace. The Ornstein-Uhlenbeck processes use the
/// exact discrete update, so the sampled autocorrelation is e^{−τ/τ_c} at
/// every multiple of the sample period.
pub fn simulate_intensity(spec: &TraceSpec, seed: u64) -> Result<IntensityTrace> {
    spec.validate()?;
    let n = spec.samples();
    let mut rng = rng::stream(seed, Domain::Intensity, 0);
    let samples = match spec.regime {
        Regime::Poisson => vec![spec.mean_rate; n],
        Regime::Thermal => {
            // Field correlation e^{−τ/2τ_c} gives intensity correlation e^{−τ/τ_c}.
            let a = (-spec.sample_period / (2.0 * spec.coherence_time)).exp();
            let kick = ((1.0 - a * a) / 2.0).sqrt();
            let mut normal = || -> f64 { rng.sample(StandardNormal) };
            let (mut re, mut im) = (normal() * 0.5f64.sqrt(), normal() * 0.5f64.sqrt());
            let mut out = Vec::with_capacity(n);
            for _ in 0..n {
                out.push(spec.mean_rate * (re * re + im * im));
                re = a * re + kick * normal();
                im = a * im + kick * normal();
            }
            out
        }
        Regime::Laser => {
            let a = (-spec.sample_period / spec.coherence_time).exp();
            let kick = (1.0 - a * a).sqrt();
            let mut x: f64 = rng.sample(StandardNormal);
            let mut out = Vec::with_capacity(n);
            for _ in 0..n {
                out.push((spec.mean_rate * (1.0 + spec.ripple * x)).max(0.0));
                x = a * x + kick * rng.sample::<f64, _>(StandardNormal);
            }
            out
        }
    };
    Ok(IntensityTrace {
        regime: spec.regime,
        sample_period: spec.sample_period,
        samples,
    })
}

/// Intensity correlation time of below-threshold (ASE) light,
/// 1/(κ − G).
pub fn thermal_coherence_time(kappa: f64, gain: f64) -> Result<f64> {
    if !(kappa > gain) || gain < 0.0 {
        return Err(Error::Domain(format!("below-threshold light needs 0 <= G < kappa (G = {gain:e}, kappa = {kappa:e})")));
    }
    Ok(1.0 / (kappa - gain))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn autocorrelation(x: &[f64], lag: usize) -> f64 {
        let n = x.len() - lag;
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / x.len() as f64;
        (0..n).map(|i| (x[i] - mean) * (x[i + lag] - mean)).sum::<f64>() / n as f64 / var
    }

    #[test]
    fn poisson_trace_is_flat() {
        let t = simulate_intensity(&TraceSpec::new(Regime::Poisson, 1234.0, 0.0, 1.0, 1e-3), 1).unwrap();
        assert_eq!(t.samples.len(), 1000);
        assert!(t.samples.iter().all(|&s| s == 1234.0));
    }

    #[test]
    fn thermal_intensity_is_exponential() {
        let spec = TraceSpec::new(Regime::Thermal, 1e5, 1e-5, 0.2, 1e-6);
        let t = simulate_intensity(&spec, 11).unwrap();
        let mean = t.mean();
        let var = t.samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / t.samples.len() as f64;
        assert!((mean / 1e5 - 1.0).abs() < 0.05, "mean {mean}");
        assert!((var / (mean * mean) - 1.0).abs() < 0.05, "var/mean² {}", var / (mean * mean));
    }

    #[test]
    fn thermal_correlation_time_matches_gain_deficit() {
        let kappa = 4.4e5;
        let tau = thermal_coherence_time(kappa, 0.9 * kappa).unwrap();
        assert!((tau - 1.0 / (0.1 * kappa)).abs() < 1e-18);
        let dt = tau / 20.0;
        let t = simulate_intensity(&TraceSpec::new(Regime::Thermal, 1e4, tau, 20_000.0 * tau, dt), 5).unwrap();
        // Interpolated 1/e crossing of the intensity autocorrelation.
        let target = (-1.0f64).exp();
        let lag = (1..200).find(|&l| autocorrelation(&t.samples, l) < target).unwrap();
        let (hi, lo) = (autocorrelation(&t.samples, lag - 1), autocorrelation(&t.samples, lag));
        let measured = (lag as f64 - 1.0 + (hi - target) / (hi - lo)) * dt;
        assert!((measured / tau - 1.0).abs() < 0.1, "measured {measured:e} vs {tau:e}");
        assert!(thermal_coherence_time(kappa, kappa).is_err());
    }

    #[test]
    fn laser_ripple_rms() {
        let t = simulate_intensity(&TraceSpec::new(Regime::Laser, 5e5, 1e-4, 1.0, 1e-6), 2).unwrap();
        let mean = t.mean();
        let rms = (t.samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / t.samples.len() as f64).sqrt() / mean;
        assert!((rms / DEFAULT_RIPPLE - 1.0).abs() < 0.1, "rms {rms}");
    }

    #[test]
    fn preconditions() {
        assert!(simulate_intensity(&TraceSpec::new(Regime::Thermal, 1e3, 1e-6, 1.0, 1e-6), 0).is_err());
        assert!(simulate_intensity(&TraceSpec::new(Regime::Thermal, 1e3, 1e-3, 0.05, 1e-5), 0).is_err());
        assert!(simulate_intensity(&TraceSpec::new(Regime::Poisson, 0.0, 0.0, 1.0, 1e-3), 0).is_err());
        assert!("laser".parse::<Regime>().is_ok());
        assert!("coherent".parse::<Regime>().is_err());
    }

    #[test]
    fn deterministic_per_seed() {
        let spec = TraceSpec::new(Regime::Thermal, 1e3, 1e-4, 0.1, 1e-5);
        assert_eq!(simulate_intensity(&spec, 3).unwrap(), simulate_intensity(&spec, 3).unwrap());
        assert_ne!(simulate_intensity(&spec, 3).unwrap(), simulate_intensity(&spec, 4).unwrap());
    }
}
