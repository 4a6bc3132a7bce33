//! Acceptance gate: one PASS/FAIL line per criterion.
//!
//! The process exits non-zero when a criterion fails that is not listed in
//! `KNOWN_GAPS`. Known gaps still print FAIL.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use rand::Rng;
use tempfile::TempDir;
use virtlase_core::gain::{calibrate, output_power, two_photon_resonance, Apparatus, CalibrationTargets, GainModel, OperatingPoint};
use virtlase_core::geometry::{CavityGeometry, Jones, Vec3};
use virtlase_core::numerics::golden_max;
use virtlase_core::photonstats::{
    g2_cross, g2_cross_serial, poissonize, simulate_intensity, thermal_g2_bin, washout_coherence_time, ClickStream,
    CorrelationResult, Regime, TraceSpec,
};
use virtlase_core::rng::{stream, Domain};
use virtlase_core::atomics::TransitionSpec;
use virtlase_core::units::{angular, MHZ};

// Pinned tolerances.
const LOBE_TOL: f64 = 1.0 * MHZ;
const MAP_SECONDS: f64 = 60.0;
const INVARIANCE_POINTS: usize = 100;
const INVARIANCE_TOL: f64 = 1e3;
const MOT_SLOPE_TOL: f64 = 1e-3;
const ZEEMAN_SLOPE: f64 = 2.10e6;
const ZEEMAN_SLOPE_TOL: f64 = 0.02e6;
const MEASURED_ZEEMAN_SLOPE: f64 = 1.6e6;
const THRESHOLD_ATOMS: f64 = 5000.0;
const THRESHOLD_ATOMS_TOL: f64 = 1.0;
const RATIO_TOL: f64 = 1e-3;
const POISSON_SIGMAS: f64 = 3.0;
const THERMAL_PEAK_TOL: f64 = 0.05;
const SIEGERT_TOL: f64 = 0.05;
const LASER_MAX_DEVIATION: f64 = 1e-3;
const WASHOUT_PEAK: f64 = 1.6;
const WASHOUT_TOL: f64 = 0.1;
const STATS_SECONDS: f64 = 300.0;
const BUDGET_PHOTONS: f64 = 6e5;
const REPORTED_BUDGET_POWER: f64 = 1e-9;
const CORRELATOR_SECONDS: f64 = 60.0;
const MEMORY_BYTES: f64 = 1e9;

/// Criteria that cannot pass as stated; see the README.
const KNOWN_GAPS: &[&str] = &["7(iii)"];

struct Gate {
    failures: Vec<String>,
}

impl Gate {
    fn check(&mut self, id: &str, pass: bool, detail: String) {
        println!("{} criterion {id}: {detail}", if pass { "PASS" } else { "FAIL" });
        if !pass {
            self.failures.push(id.to_string());
        }
    }
}

struct Cli {
    dir: TempDir,
}

impl Cli {
    fn new() -> Self {
        Self { dir: TempDir::new().expect("temp dir") }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn write(&self, name: &str, text: &str) {
        std::fs::write(self.path(name), text).expect("write");
    }

    fn run(&self, args: &[&str]) -> std::process::Output {
        let out = Command::new(env!("CARGO_BIN_EXE_virtlase"))
            .current_dir(self.dir.path())
            .args(args)
            .output()
            .expect("binary runs");
        if !out.status.success() {
            eprintln!("virtlase {args:?}: {}", String::from_utf8_lossy(&out.stderr));
        }
        out
    }

    /// Runs with `--out NAME` and returns the side-car's result entries.
    fn results(&self, name: &str, args: &[&str]) -> Option<BTreeMap<String, f64>> {
        let mut full = vec!["--out", name];
        full.extend_from_slice(args);
        if !self.run(&full).status.success() {
            return None;
        }
        let meta = std::fs::read_to_string(self.path(&format!("{name}.meta"))).ok()?;
        Some(
            meta.lines()
                .filter_map(|l| l.strip_prefix("result."))
                .filter_map(|l| l.split_once(" = "))
                .filter_map(|(k, v)| Some((k.to_string(), v.parse().ok()?)))
                .collect(),
        )
    }
}

fn model() -> GainModel {
    let app = Apparatus::default();
    let cal = calibrate(&app, &CalibrationTargets::default()).expect("calibration");
    GainModel::new(app, cal).expect("model")
}

fn criterion_1(gate: &mut Gate, cli: &Cli) {
    let start = Instant::now();
    let r = cli.results("map.csv", &["map"]);
    let elapsed = start.elapsed().as_secs_f64();
    let Some(r) = r else {
        return gate.check("1", false, "map command failed".into());
    };
    let lobes = r.get("lobes").copied().unwrap_or(0.0) as usize;
    let centres: Vec<(f64, f64)> = (0..lobes)
        .map(|i| (r[&format!("lobe.{i}.pump_detuning_hz")], r[&format!("lobe.{i}.cavity_detuning_hz")]))
        .collect();
    let near = |p: f64, c: f64| centres.iter().any(|&(x, y)| (x - p).abs() <= LOBE_TOL && (y - c).abs() <= LOBE_TOL);
    let pass = lobes == 2 && near(5.0 * MHZ, -30.0 * MHZ) && near(-5.0 * MHZ, -40.0 * MHZ) && elapsed < MAP_SECONDS;
    let shown: Vec<String> = centres.iter().map(|(p, c)| format!("({:+.3}, {:+.3}) MHz", p / MHZ, c / MHZ)).collect();
    gate.check("1", pass, format!("{lobes} lobes at {} in {elapsed:.2} s (21x61 grid)", shown.join(", ")));
}

fn criterion_2(gate: &mut Gate, model: &GainModel) {
    let mut rng = stream(2024, Domain::Sampling, 0);
    let mut worst: f64 = 0.0;
    let mut evaluated = 0;
    while evaluated < INVARIANCE_POINTS {
        let op = OperatingPoint {
            pump_detuning: rng.random_range(-15e6..15e6),
            mot_detuning: rng.random_range(-45e6..-25e6),
            pump_power: rng.random_range(1e-3..10e-3),
            pump_polarization: Jones::linear(rng.random_range(10.0..170.0)),
            b_offset: Vec3::new(rng.random_range(0.5..6.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
            ..OperatingPoint::default()
        };
        let target = two_photon_resonance(op.pump_detuning, op.mot_detuning);
        let gain = |c: f64| model.mode_gain(&OperatingPoint { cavity_detuning: c, ..op.clone() }, 0).map_or(f64::NAN, |g| g.total);
        if gain(target).is_nan() || gain(target) <= 0.0 {
            continue;
        }
        let (best, _) = golden_max(target - 30e6, target + 30e6, 1e-3, gain);
        worst = worst.max((best - target).abs());
        evaluated += 1;
    }
    gate.check(
        "2",
        worst < INVARIANCE_TOL,
        format!("max |argmax δ_c − δ_p − δ_MOT| = {worst:.3e} Hz over {evaluated} random points"),
    );
}

fn criterion_3(gate: &mut Gate, cli: &Cli) {
    let Some(r) = cli.results("mot.csv", &["shift-scan", "--vary", "mot-detuning"]) else {
        return gate.check("3", false, "shift-scan failed".into());
    };
    let slope = r["fit.cavity.slope"];
    gate.check(
        "3",
        (slope - 1.0).abs() <= MOT_SLOPE_TOL,
        format!("δ_c,opt vs δ_MOT slope {slope:.6} over −40..−20 MHz (pump slope {:.2e})", r["fit.pump.slope"]),
    );
}

fn criterion_4(gate: &mut Gate, cli: &Cli) {
    let Some(r) = cli.results("b.csv", &["shift-scan", "--vary", "b-offset"]) else {
        return gate.check("4", false, "shift-scan failed".into());
    };
    let slope = r["fit.pump.slope"];
    gate.check(
        "4",
        (slope - ZEEMAN_SLOPE).abs() <= ZEEMAN_SLOPE_TOL,
        format!(
            "model slope {:.4} MHz/G vs measured {:.1} MHz/G (ratio {:.3}, documented gap)",
            slope / MHZ,
            MEASURED_ZEEMAN_SLOPE / MHZ,
            slope / MEASURED_ZEEMAN_SLOPE
        ),
    );
}

fn criterion_5(gate: &mut Gate, cli: &Cli) {
    let atoms = cli
        .results("atoms.csv", &["threshold", "--vary", "atoms"])
        .and_then(|r| r.get("threshold.tem0").copied());
    let atoms_ok = atoms.is_some_and(|a| (a - THRESHOLD_ATOMS).abs() <= THRESHOLD_ATOMS_TOL);

    let mut thresholds = Vec::new();
    for pol in ["90", "45", "-45", "circular+", "0"] {
        let conf = format!("pol{}.conf", thresholds.len());
        cli.write(&conf, &format!("pump.polarization = {pol}\n"));
        let out = format!("pol{}.csv", thresholds.len());
        let r = cli.results(&out, &["--config", &conf, "threshold", "--vary", "pump"]);
        thresholds.push((pol, r.map(|r| r.get("threshold.tem0").copied())));
    }
    let base = thresholds[0].1.flatten();
    let mut ratios_ok = base.is_some();
    let mut shown = Vec::new();
    for (pol, t) in &thresholds {
        match (t, base) {
            (Some(Some(t)), Some(b)) => {
                let ratio = t / b;
                let expected = if *pol == "90" { 1.0 } else { 2.0 };
                ratios_ok &= (ratio - expected).abs() <= RATIO_TOL * expected;
                shown.push(format!("{pol}: {ratio:.5}"));
            }
            (Some(None), _) => {
                ratios_ok &= *pol == "0";
                shown.push(format!("{pol}: ∞"));
            }
            _ => {
                ratios_ok = false;
                shown.push(format!("{pol}: error"));
            }
        }
    }

    cli.write("single_mode.conf", "pump.detuning = 6.7 MHz\ncavity.detuning = -28.3 MHz\n");
    let single_mode = cli.results("single_mode.csv", &["--config", "single_mode.conf", "threshold", "--vary", "pump"]);
    let (t0, t37) = single_mode.map_or((None, None), |r| (r.get("threshold.tem0").copied(), r.get("threshold.tem37").copied()));
    let order_ok = matches!((t0, t37), (Some(a), Some(b)) if a < b);

    gate.check(
        "5",
        atoms_ok && ratios_ok && order_ok,
        format!(
            "atom threshold {}; pump ratios {}; TEM0 {} < TEM37 {} at 6.7 MHz",
            atoms.map_or("none".into(), |a| format!("{a:.4}")),
            shown.join(", "),
            t0.map_or("none".into(), |t| format!("{:.3} mW", t * 1e3)),
            t37.map_or("none".into(), |t| format!("{:.3} mW", t * 1e3)),
        ),
    );
}

fn criterion_6(gate: &mut Gate, cli: &Cli) {
    let fixture = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/polarization_table.txt");
    let expected = std::fs::read(&fixture).expect("fixture");
    let out = cli.run(&["polarization-table"]);
    let pass = out.status.success() && out.stdout == expected;
    gate.check("6", pass, format!("table vs fixture: {} bytes, identical = {pass}", out.stdout.len()));
}

fn clicks(spec: &TraceSpec, seed: u64) -> (ClickStream, ClickStream) {
    let trace = simulate_intensity(spec, seed).expect("trace");
    poissonize(&trace, seed).expect("clicks")
}

/// Shot-noise standard error of the zero-delay bin.
fn noise_floor(r: &CorrelationResult) -> f64 {
    1.0 / r.expected[r.central_index()].sqrt()
}

/// Returns the laser-regime streams and correlation for criterion 9.
fn criterion_7(gate: &mut Gate) -> (ClickStream, ClickStream, CorrelationResult, f64) {
    let start = Instant::now();

    // (i) Poisson control.
    let (a, b) = clicks(&TraceSpec::new(Regime::Poisson, 5e5, 0.0, 10.0, 1e-5), 0);
    let r = g2_cross(&a, &b, 2.6e-6, 50e-6).expect("g2");
    let worst = r.g2.iter().zip(&r.uncertainty).map(|(g, s)| ((g - 1.0) / s).abs()).fold(0.0, f64::max);
    gate.check(
        "7(i)",
        worst <= POISSON_SIGMAS,
        format!("Poisson light: worst bin {worst:.2}σ from 1 over {} bins", r.g2.len()),
    );

    // (ii) Thermal light, fine bins.
    let tau = 10e-6;
    let (a, b) = clicks(&TraceSpec::new(Regime::Thermal, 2e5, tau, 10.0, tau / 10.0), 0);
    let r = g2_cross(&a, &b, 500e-9, 50e-6).expect("g2");
    let g0 = r.g2[r.central_index()];
    let siegert = r
        .lags
        .iter()
        .zip(&r.g2)
        .map(|(&t, &g)| {
            let model = thermal_g2_bin(tau, t, r.bin_width);
            (g - model).abs() / model
        })
        .fold(0.0, f64::max);
    gate.check(
        "7(ii)",
        (g0 - 2.0).abs() <= THERMAL_PEAK_TOL && siegert <= SIEGERT_TOL,
        format!("thermal τ_c = 10 μs, 500 ns bins: g²(0) = {g0:.4}, max Siegert deviation {:.2}%", 100.0 * siegert),
    );

    // (iii) Laser regime at the experiment's rate, duration and binning.
    let (la, lb) = clicks(&TraceSpec::new(Regime::Laser, 5e5, 1e-3, 22.0, 1e-5), 0);
    let corr_start = Instant::now();
    let laser = g2_cross(&la, &lb, 2.6e-6, 1e-3).expect("g2");
    let corr_seconds = corr_start.elapsed().as_secs_f64();
    let max_dev = laser.max_deviation(1e-3);
    let c = laser.central_index();
    gate.check(
        "7(iii)",
        max_dev < LASER_MAX_DEVIATION,
        format!(
            "laser, {} clicks, 2.6 μs bins: max|g²−1| over ±1 ms = {max_dev:.2e} (limit {LASER_MAX_DEVIATION:.0e}); \
             |g²(0)−1| = {:.2e}, per-bin noise floor {:.2e}",
            la.len() + lb.len(),
            (laser.g2[c] - 1.0).abs(),
            noise_floor(&laser),
        ),
    );

    // (iv) Washout: τ_c chosen so the 2.6 μs bin peak should read 1.6.
    let bin = 2.6e-6;
    let tau = washout_coherence_time(WASHOUT_PEAK, bin).expect("inversion");
    let (a, b) = clicks(&TraceSpec::new(Regime::Thermal, 5e5, tau, 2.0, tau / 10.0), 0);
    let r = g2_cross(&a, &b, bin, 20e-6).expect("g2");
    let g0 = r.g2[r.central_index()];
    gate.check(
        "7(iv)",
        (g0 - WASHOUT_PEAK).abs() <= WASHOUT_TOL,
        format!("washout-inverted τ_c = {:.4} μs, 2.6 μs bins: g²(0) = {g0:.4}", tau * 1e6),
    );

    let total = start.elapsed().as_secs_f64();
    gate.check("7(time)", total < STATS_SECONDS, format!("photon-statistics scenarios took {total:.1} s"));
    (la, lb, laser, corr_seconds)
}

fn criterion_8(gate: &mut Gate) {
    let cavity = CavityGeometry::default();
    let green = TransitionSpec::green_556();
    let p = |n: f64| output_power(n, &cavity, &green).expect("power");
    let budget = p(BUDGET_PHOTONS);
    let direct = 0.05 * BUDGET_PHOTONS * angular(70e3) * green.photon_energy();
    let linear = [1.0, 10.0, 1e3, 1e6, 1e9].iter().all(|&n| ((p(n) / n) / (budget / BUDGET_PHOTONS) - 1.0).abs() < 1e-12);
    let eta_ok = cavity.output_fraction == 0.05 && ((budget - direct) / direct).abs() < 1e-12;
    gate.check(
        "8",
        linear && eta_ok && p(0.0) == 0.0,
        format!(
            "P(6e5 photons) = {:.3} nW with η = 0.05, κ = 2π·70 kHz energy decay; reported pairing 1 nW, factor {:.2}",
            budget * 1e9,
            budget / REPORTED_BUDGET_POWER
        ),
    );
}

fn peak_memory() -> Option<f64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    let kb: f64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb * 1024.0)
}

fn criterion_9(gate: &mut Gate, a: &ClickStream, b: &ClickStream, sharded: &CorrelationResult, seconds: f64) {
    let serial = g2_cross_serial(a, b, 2.6e-6, 1e-3).expect("g2");
    let identical = serial == *sharded;
    let memory = peak_memory();
    let memory_ok = memory.is_some_and(|m| m < MEMORY_BYTES);
    gate.check(
        "9",
        seconds < CORRELATOR_SECONDS && memory_ok && identical,
        format!(
            "{} clicks correlated in {seconds:.1} s on {} thread(s); peak RSS {}; serial == sharded: {identical}",
            a.len() + b.len(),
            rayon::current_num_threads(),
            memory.map_or("unknown".into(), |m| format!("{:.0} MB", m / 1e6)),
        ),
    );
}

fn criterion_10(gate: &mut Gate, cli: &Cli) {
    let cases: [(&str, &[&str], &[&str]); 7] = [
        ("r-cal.txt", &["calibrate"], &[]),
        ("r-map.csv", &["map"], &[]),
        ("r-thr.csv", &["threshold", "--vary", "atoms"], &[]),
        ("r-shift.csv", &["shift-scan", "--vary", "mot-detuning", "--from", "-38 MHz", "--to", "-32 MHz", "--step", "2 MHz"], &[]),
        ("r-table.txt", &["polarization-table", "--b-direction", "1,1,0", "--pump", "30"], &[]),
        ("r-g2.csv", &["--seed", "17", "g2", "--duration", "2 s"], &[]),
        ("r-clicks.csv", &["--seed", "17", "clicks", "--duration", "1 s"], &[".det0.clks", ".det1.clks"]),
    ];
    let mut mismatched = Vec::new();
    for (name, args, extra) in cases {
        let mut full = vec!["--out", name];
        full.extend_from_slice(args);
        let again = format!("again-{name}");
        let meta = format!("{name}.meta");
        let ok = cli.run(&full).status.success() && cli.run(&["--out", &again, "replay", &meta]).status.success();
        let same = |suffix: &str| {
            let a = std::fs::read(cli.path(&format!("{name}{suffix}"))).ok();
            let b = std::fs::read(cli.path(&format!("{again}{suffix}"))).ok();
            a.is_some() && a == b
        };
        if !(ok && same("") && extra.iter().all(|s| same(s))) {
            mismatched.push(args[0]);
        }
    }
    gate.check(
        "10",
        mismatched.is_empty(),
        if mismatched.is_empty() {
            "all 7 commands replay bit-exactly from their metadata".into()
        } else {
            format!("replay mismatch: {}", mismatched.join(", "))
        },
    );
}

fn main() {
    let mut gate = Gate { failures: Vec::new() };
    let cli = Cli::new();
    let model = model();

    criterion_1(&mut gate, &cli);
    criterion_2(&mut gate, &model);
    criterion_3(&mut gate, &cli);
    criterion_4(&mut gate, &cli);
    criterion_5(&mut gate, &cli);
    criterion_6(&mut gate, &cli);
    let (a, b, laser, seconds) = criterion_7(&mut gate);
    criterion_8(&mut gate);
    criterion_9(&mut gate, &a, &b, &laser, seconds);
    criterion_10(&mut gate, &cli);

    let unexpected: Vec<&String> = gate.failures.iter().filter(|f| !KNOWN_GAPS.contains(&f.as_str())).collect();
    println!(
        "{} failing criteria ({} known gap(s), {} unexpected)",
        gate.failures.len(),
        gate.failures.len() - unexpected.len(),
        unexpected.len()
    );
    if !unexpected.is_empty() {
        std::process::exit(1);
    }
}
