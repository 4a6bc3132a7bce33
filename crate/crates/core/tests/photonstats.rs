use proptest::prelude::*;
use virtlase_core::photonstats::{
    g2_auto, g2_cross, g2_cross_serial, poissonize, simulate_intensity, thermal_g2_bin, ClickStream, Regime,
    TraceSpec,
};

fn clicks(regime: Regime, rate: f64, tau: f64, duration: f64, seed: u64) -> (ClickStream, ClickStream) {
    let dt = if regime == Regime::Thermal { tau / 10.0 } else { 1e-5 };
    let spec = TraceSpec::new(regime, rate, tau, duration, dt);
    poissonize(&simulate_intensity(&spec, seed).unwrap(), seed).unwrap()
}

fn merge(a: &ClickStream, b: &ClickStream) -> ClickStream {
    let mut all: Vec<u64> = a.timestamps().iter().chain(b.timestamps()).copied().collect();
    all.sort_unstable();
    // Coincident clicks on the two detectors collapse to one event.
    all.dedup();
    ClickStream::new(0, all, a.duration_ns()).unwrap()
}

fn timestamps() -> impl Strategy<Value = (Vec<u64>, u64)> {
    prop::collection::btree_set(0u64..1_000_000_000, 1..200).prop_flat_map(|set| {
        let v: Vec<u64> = set.into_iter().collect();
        let last = v.last().copied().unwrap_or(0);
        (Just(v), last..last + 1000)
    })
}

proptest! {
    #[test]
    fn binary_round_trip((ts, duration) in timestamps(), id in 0u32..8) {
        let s = ClickStream::new(id, ts, duration).unwrap();
        let mut buf = Vec::new();
        s.write_binary(&mut buf).unwrap();
        prop_assert_eq!(buf.len(), 28 + 8 * s.len());
        prop_assert_eq!(ClickStream::read_binary(buf.as_slice()).unwrap(), s);
    }

    #[test]
    fn text_round_trip((ts, duration) in timestamps(), id in 0u32..8) {
        let s = ClickStream::new(id, ts, duration).unwrap();
        let mut buf = Vec::new();
        s.write_text(&mut buf).unwrap();
        prop_assert_eq!(ClickStream::read_text(buf.as_slice()).unwrap(), s);
    }

    #[test]
    fn swap_reflects_lag_axis((ta, da) in timestamps(), (tb, db) in timestamps(), width in 1u64..50_000) {
        let duration = da.max(db);
        let a = ClickStream::new(0, ta, duration).unwrap();
        let b = ClickStream::new(1, tb, duration).unwrap();
        let w = width as f64 * 1e-9;
        let ab = g2_cross(&a, &b, w, 20.0 * w).unwrap();
        let ba = g2_cross(&b, &a, w, 20.0 * w).unwrap();
        let mut rev = ba.counts.clone();
        rev.reverse();
        prop_assert_eq!(&ab.counts, &rev);
        let mut rev_g2 = ba.g2.clone();
        rev_g2.reverse();
        for (x, y) in ab.g2.iter().zip(&rev_g2) {
            prop_assert!(x == y || (x.is_nan() && y.is_nan()));
        }
    }
}

#[test]
fn sharded_matches_serial() {
    let (a, b) = clicks(Regime::Thermal, 2e5, 2e-6, 2.0, 7);
    assert!(a.len() > 1 << 16);
    let sharded = g2_cross(&a, &b, 100e-9, 20e-6).unwrap();
    let serial = g2_cross_serial(&a, &b, 100e-9, 20e-6).unwrap();
    assert_eq!(sharded, serial);
}

#[test]
fn same_seed_same_everything() {
    let (a1, b1) = clicks(Regime::Laser, 1e5, 1e-3, 1.0, 3);
    let (a2, b2) = clicks(Regime::Laser, 1e5, 1e-3, 1.0, 3);
    assert_eq!((&a1, &b1), (&a2, &b2));
    assert_eq!(g2_cross(&a1, &b1, 1e-6, 1e-4).unwrap(), g2_cross(&a2, &b2, 1e-6, 1e-4).unwrap());
    let (a3, _) = clicks(Regime::Laser, 1e5, 1e-3, 1.0, 4);
    assert_ne!(a1, a3);
}

#[test]
fn poisson_is_flat_and_normalized() {
    let (a, b) = clicks(Regime::Poisson, 2e5, 0.0, 10.0, 11);
    let max_lag = 100e-6;
    let r = g2_cross(&a, &b, 5e-6, max_lag).unwrap();
    let worst = r.g2.iter().zip(&r.uncertainty).map(|(g, s)| ((g - 1.0) / s).abs()).fold(0.0, f64::max);
    assert!(worst < 3.0, "worst bin {worst} sigma");
    let edge: Vec<usize> = (0..r.lags.len()).filter(|&i| r.lags[i].abs() >= 0.8 * max_lag).collect();
    let counts: u64 = edge.iter().map(|&i| r.counts[i]).sum();
    let expected: f64 = edge.iter().map(|&i| r.expected[i]).sum();
    let pooled = counts as f64 / expected;
    assert!((pooled - 1.0).abs() < 3.0 / expected.sqrt(), "edge mean {pooled}");
}

#[test]
fn thermal_follows_siegert() {
    let tau = 5e-6;
    let (a, b) = clicks(Regime::Thermal, 2e5, tau, 10.0, 5);
    let r = g2_cross(&a, &b, 250e-9, 20e-6).unwrap();
    let width = r.bin_width;
    for ((&t, &g), &s) in r.lags.iter().zip(&r.g2).zip(&r.uncertainty) {
        let model = thermal_g2_bin(tau, t, width);
        assert!((g - model).abs() < 0.05 * model + 3.0 * s, "tau {t}: {g} vs {model}");
    }
    let g0 = r.g2[r.central_index()];
    assert!((g0 - 2.0).abs() < 0.1, "g2(0) = {g0}");
}

#[test]
fn autocorrelation_matches_cross() {
    let tau = 5e-6;
    let (a, b) = clicks(Regime::Thermal, 2e5, tau, 5.0, 9);
    let merged = merge(&a, &b);
    let cross = g2_cross(&a, &b, 1e-6, 20e-6).unwrap();
    let auto = g2_auto(&merged, 1e-6, 20e-6).unwrap();
    assert_eq!(cross.lags, auto.lags);
    for i in 0..cross.lags.len() {
        let sigma = (cross.uncertainty[i].powi(2) + auto.uncertainty[i].powi(2)).sqrt();
        assert!((cross.g2[i] - auto.g2[i]).abs() < 4.0 * sigma, "bin {i}");
    }
}
