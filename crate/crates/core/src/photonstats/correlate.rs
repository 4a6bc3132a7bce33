//! Streaming start-stop correlator.
//!
//! Delays d = t_b − t_a are histogrammed into bins centered at kΔ for
//! |k| ≤ K = ⌊max_lag/Δ⌋. Timestamps are integer nanoseconds and bins are
//! closed integer ranges, symmetric under d → −d: bin 0 is [−⌊Δ/2⌋, ⌊Δ/2⌋]
//! and bin k > 0 ends at kΔ + ⌊Δ/2⌋. The expected uncorrelated count of a
//! bin sums r_a·r_b·(T − |d|) over its integer delays, which is the overlap
//! (edge) correction at 1 ns resolution.

use rayon::prelude::*;

use super::ClickStream;
use crate::numerics::bisect;
use crate::{Error, Result};

/// Start events per shard. Fixed so the decomposition never depends on the
/// thread count.
const SHARD: usize = 1 << 15;

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationResult {
    /// Bin centers (s), symmetric about zero.
    pub lags: Vec<f64>,
    pub g2: Vec<f64>,
    /// One standard error per bin; 1/expected for empty bins.
    pub uncertainty: Vec<f64>,
    pub counts: Vec<u64>,
    /// Uncorrelated expectation per bin.
    pub expected: Vec<f64>,
    /// Effective bin width (s), the requested width rounded to 1 ns.
    pub bin_width: f64,
    pub total_pairs: u64,
}

impl CorrelationResult {
    pub fn central_index(&self) -> usize {
        self.lags.len() / 2
    }

    /// Largest |g² − 1| over bins with |τ| ≤ `window`.
    pub fn max_deviation(&self, window: f64) -> f64 {
        self.lags
            .iter()
            .zip(&self.g2)
            .filter(|(t, _)| t.abs() <= window * (1.0 + 1e-12))
            .map(|(_, g)| (g - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

struct Bins {
    width_ns: i64,
    /// Inclusive integer delay range of each bin, ascending.
    lower: Vec<i64>,
    upper: Vec<i64>,
}

impl Bins {
    fn new(bin_width: f64, max_lag: f64, duration_ns: u64) -> Result<Self> {
        if !(bin_width > 0.0) || !bin_width.is_finite() {
            return Err(Error::Parameter("bin_width must be positive".into()));
        }
        if !(max_lag >= bin_width) {
            return Err(Error::Parameter("max_lag must be >= bin_width".into()));
        }
        let width_ns = (bin_width * 1e9).round() as i64;
        if width_ns < 1 {
            return Err(Error::Parameter("bin_width below 1 ns resolution".into()));
        }
        let k_max = ((max_lag * 1e9) / width_ns as f64 + 1e-9).floor() as i64;
        let half = width_ns / 2;
        let reach = k_max * width_ns + half;
        if reach as f64 >= duration_ns as f64 {
            return Err(Error::Parameter("max_lag must be shorter than the overlap duration".into()));
        }
        let upper_pos = |k: i64| k * width_ns + half;
        let lower_pos = |k: i64| if k == 0 { -half } else { upper_pos(k - 1) + 1 };
        let mut lower = Vec::new();
        let mut upper = Vec::new();
        for k in -k_max..=k_max {
            if k < 0 {
                lower.push(-upper_pos(-k));
                upper.push(-lower_pos(-k));
            } else {
                lower.push(lower_pos(k));
                upper.push(upper_pos(k));
            }
        }
        Ok(Self { width_ns, lower, upper })
    }

    fn len(&self) -> usize {
        self.upper.len()
    }

    /// Σ (T − |d|) over the integer delays of bin `j`, in ns.
    fn overlap(&self, j: usize, duration_ns: f64) -> f64 {
        let (l, u) = (self.lower[j] as i128, self.upper[j] as i128);
        let tri = |n: i128| n * (n + 1) / 2;
        let abs_sum = if l >= 0 {
            tri(u) - tri(l - 1)
        } else if u <= 0 {
            tri(-l) - tri(-u - 1)
        } else {
            tri(-l) + tri(u)
        };
        (u - l + 1) as f64 * duration_ns - abs_sum as f64
    }
}

fn check(s: &ClickStream) -> Result<()> {
    if s.is_empty() {
        return Err(Error::EmptyStream);
    }
    Ok(())
}

/// Histogram of b-clicks relative to a[range].
fn sweep(a: &[u64], b: &[u64], bins: &Bins, hist: &mut [u64]) {
    let first = bins.lower[0];
    let last = *bins.upper.last().expect("at least one bin");
    let Some(&a0) = a.first() else { return };
    let mut lo = b.partition_point(|&t| (t as i64) < a0 as i64 + first);
    for &ta in a {
        let ta = ta as i64;
        while lo < b.len() && (b[lo] as i64) < ta + first {
            lo += 1;
        }
        let end = ta + last;
        let mut bin = 0;
        let mut edge = ta + bins.upper[0];
        for &tb in &b[lo..] {
            let tb = tb as i64;
            if tb > end {
                break;
            }
            while tb > edge {
                bin += 1;
                edge = ta + bins.upper[bin];
            }
            hist[bin] += 1;
        }
    }
}

fn histogram(a: &[u64], b: &[u64], bins: &Bins, sharded: bool) -> Vec<u64> {
    let n = bins.len();
    if !sharded {
        let mut hist = vec![0u64; n];
        sweep(a, b, bins, &mut hist);
        return hist;
    }
    a.par_chunks(SHARD)
        .map(|chunk| {
            let mut hist = vec![0u64; n];
            sweep(chunk, b, bins, &mut hist);
            hist
        })
        .reduce(
            || vec![0u64; n],
            |mut x, y| {
                x.iter_mut().zip(y).for_each(|(x, y)| *x += y);
                x
            },
        )
}

fn normalize(counts: Vec<u64>, pair_rate: f64, duration_ns: f64, bins: &Bins) -> CorrelationResult {
    let k_max = (bins.len() / 2) as i64;
    let lags = (-k_max..=k_max).map(|k| (k * bins.width_ns) as f64 * 1e-9).collect();
    let expected: Vec<f64> = (0..bins.len()).map(|j| pair_rate * bins.overlap(j, duration_ns)).collect();
    let g2: Vec<f64> = counts.iter().zip(&expected).map(|(&h, &e)| h as f64 / e).collect();
    let uncertainty = counts
        .iter()
        .zip(&expected)
        .zip(&g2)
        .map(|((&h, &e), &g)| if h > 0 { g / (h as f64).sqrt() } else { 1.0 / e })
        .collect();
    CorrelationResult {
        lags,
        g2,
        uncertainty,
        total_pairs: counts.iter().sum(),
        counts,
        expected,
        bin_width: bins.width_ns as f64 * 1e-9,
    }
}

fn cross(a: &ClickStream, b: &ClickStream, bin_width: f64, max_lag: f64, sharded: bool) -> Result<CorrelationResult> {
    check(a)?;
    check(b)?;
    let duration_ns = a.duration_ns().min(b.duration_ns());
    let bins = Bins::new(bin_width, max_lag, duration_ns)?;
    let counts = histogram(a.timestamps(), b.timestamps(), &bins, sharded);
    let t = duration_ns as f64;
    let pair_rate = (a.len() as f64 * b.len() as f64) / (t * t);
    Ok(normalize(counts, pair_rate, t, &bins))
}

/// Cross-correlation g²_ab(τ), τ = t_b − t_a. Sharded over start events.
pub fn g2_cross(a: &ClickStream, b: &ClickStream, bin_width: f64, max_lag: f64) -> Result<CorrelationResult> {
    cross(a, b, bin_width, max_lag, true)
}

/// Single-threaded reference; bit-identical to [`g2_cross`].
pub fn g2_cross_serial(a: &ClickStream, b: &ClickStream, bin_width: f64, max_lag: f64) -> Result<CorrelationResult> {
    cross(a, b, bin_width, max_lag, false)
}

/// Autocorrelation of one stream, excluding each click paired with itself.
pub fn g2_auto(s: &ClickStream, bin_width: f64, max_lag: f64) -> Result<CorrelationResult> {
    check(s)?;
    let bins = Bins::new(bin_width, max_lag, s.duration_ns())?;
    let mut counts = histogram(s.timestamps(), s.timestamps(), &bins, true);
    counts[bins.len() / 2] -= s.len() as u64;
    let t = s.duration_ns() as f64;
    let n = s.len() as f64;
    Ok(normalize(counts, n * (n - 1.0) / (t * t), t, &bins))
}

/// g² of single-mode chaotic light, 1 + e^{−|τ|/τ_c}, averaged over the
/// bin [center − width/2, center + width/2].
pub fn thermal_g2_bin(coherence_time: f64, center: f64, width: f64) -> f64 {
    let tau = coherence_time;
    let (l, u) = (center - width / 2.0, center + width / 2.0);
    // ∫ e^{−|t|/τ} dt from 0 to x, for x ≥ 0.
    let prim = |x: f64| -tau * (-x / tau).exp_m1();
    let integral = if l >= 0.0 {
        prim(u) - prim(l)
    } else if u <= 0.0 {
        prim(-l) - prim(-u)
    } else {
        prim(-l) + prim(u)
    };
    1.0 + integral / width
}

/// Bin-averaged g²(0) of single-mode chaotic light seen through a
/// correlator bin of width Δ centered on zero delay:
/// 1 + (2τ_c/Δ)(1 − e^{−Δ/2τ_c}).
pub fn binning_washout(coherence_time: f64, bin_width: f64) -> Result<f64> {
    if !(coherence_time > 0.0) || !(bin_width > 0.0) {
        return Err(Error::Domain("coherence time and bin width must be positive".into()));
    }
    Ok(thermal_g2_bin(coherence_time, 0.0, bin_width))
}

/// Coherence time for which [`binning_washout`] equals `g2_zero`.
pub fn washout_coherence_time(g2_zero: f64, bin_width: f64) -> Result<f64> {
    if !(g2_zero > 1.0 && g2_zero < 2.0) || !(bin_width > 0.0) {
        return Err(Error::Domain(format!("washed-out peak must lie in (1, 2), got {g2_zero}")));
    }
    let f = |log_tau: f64| thermal_g2_bin(log_tau.exp(), 0.0, bin_width) - g2_zero;
    let centre = bin_width.ln();
    bisect(centre - 30.0, centre + 30.0, 1e-15, f)
        .map(f64::exp)
        .ok_or_else(|| Error::Domain("washout inversion failed".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stream(id: u32, t: &[u64], d: u64) -> ClickStream {
        ClickStream::new(id, t.to_vec(), d).unwrap()
    }

    #[test]
    fn bins_are_symmetric_integer_ranges() {
        for width in [2600.0e-9, 7.0e-9] {
            let b = Bins::new(width, 3.0 * width, 1_000_000).unwrap();
            assert_eq!(b.len(), 7);
            let n = b.len();
            for j in 0..n {
                assert_eq!(b.lower[j], -b.upper[n - 1 - j]);
                if j > 0 {
                    assert_eq!(b.lower[j], b.upper[j - 1] + 1);
                }
            }
            let w = b.width_ns;
            assert_eq!(b.upper[n / 2], w / 2);
            // Non-central bins hold exactly Δ integer delays.
            assert_eq!(b.upper[n - 1] - b.lower[n - 1] + 1, w);
        }
    }

    #[test]
    fn overlap_matches_direct_sum() {
        let b = Bins::new(5e-9, 15e-9, 1000).unwrap();
        for j in 0..b.len() {
            let direct: f64 = (b.lower[j]..=b.upper[j]).map(|d| 1000.0 - d.abs() as f64).sum();
            assert_eq!(b.overlap(j, 1000.0), direct);
        }
    }

    #[test]
    fn hand_counted_histogram() {
        let a = stream(0, &[100, 200], 1000);
        let b = stream(1, &[95, 104, 110, 300], 1000);
        // Delays: −5, 4, 10, 200, −105, −96, −90, 100.
        let r = g2_cross(&a, &b, 10e-9, 10e-9).unwrap();
        assert_eq!(r.counts, vec![0, 2, 1]);
        assert_eq!(r.total_pairs, 3);
        assert_eq!(r.lags, vec![-10e-9, 0.0, 10e-9]);
    }

    #[test]
    fn swapping_streams_mirrors_lags() {
        let a = stream(0, &[3, 50, 51, 90, 400, 410], 1000);
        let b = stream(1, &[1, 49, 60, 95, 100, 399, 420], 1000);
        let ab = g2_cross(&a, &b, 10e-9, 60e-9).unwrap();
        let ba = g2_cross(&b, &a, 10e-9, 60e-9).unwrap();
        let mirrored: Vec<f64> = ba.g2.iter().rev().copied().collect();
        assert_eq!(ab.g2, mirrored);
    }

    #[test]
    fn errors() {
        let a = stream(0, &[1, 2], 1000);
        let empty = stream(1, &[], 1000);
        assert!(matches!(g2_cross(&a, &empty, 1e-8, 1e-8), Err(Error::EmptyStream)));
        assert!(g2_cross(&a, &a, 1e-8, 5e-9).is_err());
        assert!(g2_cross(&a, &a, 0.0, 5e-9).is_err());
        assert!(g2_cross(&a, &a, 1e-8, 1e-5).is_err());
    }

    #[test]
    fn washout_limits_and_inversion() {
        assert!((binning_washout(1.0, 1e-9).unwrap() - 2.0).abs() < 1e-8);
        assert!((binning_washout(1e-9, 1.0).unwrap() - 1.0).abs() < 1e-8);
        let tau = washout_coherence_time(1.6, 2.6e-6).unwrap();
        assert!((binning_washout(tau, 2.6e-6).unwrap() - 1.6).abs() < 1e-12);
        assert!((tau / 2.6e-6 - 1.0 / 2.2517).abs() < 1e-3, "tau {tau:e}");
        assert!(washout_coherence_time(2.5, 1e-6).is_err());
        assert!(binning_washout(0.0, 1.0).is_err());
    }

    #[test]
    fn bin_average_of_flat_tail() {
        // A bin far out on the tail averages to e^{−τ/τ_c}·sinh(x)/x.
        let (tau, c, w): (f64, f64, f64) = (1.0, 3.0, 0.5);
        let x = w / (2.0 * tau);
        let expected = 1.0 + (-c / tau).exp() * x.sinh() / x;
        assert!((thermal_g2_bin(tau, c, w) - expected).abs() < 1e-14);
        assert!((thermal_g2_bin(tau, -c, w) - expected).abs() < 1e-14);
    }
}
