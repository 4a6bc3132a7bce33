use clap::ValueEnum;
use virtlase_core::photonstats::{
    binning_washout, g2_cross, poissonize, simulate_intensity, thermal_coherence_time, washout_coherence_time, ClickStream,
    Regime, TraceSpec, DEFAULT_RIPPLE,
};

use super::{quantity, Context, Report};
use crate::config::Dim;
use crate::error::CliError;
use crate::output::{Cell, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Light {
    /// Below threshold: chaotic light with τ_c = 1/(κ − G).
    Below,
    /// Above threshold: stabilized laser intensity.
    Above,
    /// Ideal constant-rate control.
    Poisson,
}

#[derive(Debug, clap::Args)]
pub struct SimArgs {
    #[arg(long, value_enum, default_value = "above")]
    pub regime: Light,
    #[arg(long, default_value = "22 s")]
    pub duration: String,
    /// Total count rate over both detectors.
    #[arg(long, default_value = "500 kHz")]
    pub rate: String,
    /// Coherence time override; below threshold it otherwise follows from
    /// the operating point.
    #[arg(long)]
    pub tau_c: Option<String>,
    /// Below threshold: choose τ_c so that the bin-averaged peak at
    /// `--bin` equals this value.
    #[arg(long)]
    pub washout_peak: Option<f64>,
    /// Intensity sample period; defaults to τ_c/10 (thermal) or 10 μs.
    #[arg(long)]
    pub sample_period: Option<String>,
    /// Relative rms intensity ripple above threshold.
    #[arg(long, default_value_t = DEFAULT_RIPPLE)]
    pub ripple: f64,
    /// Correlation time of the ripple above threshold.
    #[arg(long, default_value = "1 ms")]
    pub ripple_time: String,
    #[arg(long, default_value = "2.6 us")]
    pub bin: String,
}

#[derive(Debug, clap::Args)]
pub struct G2Args {
    #[command(flatten)]
    pub sim: SimArgs,
    #[arg(long, default_value = "1 ms")]
    pub max_lag: String,
    /// Also write both click streams next to the output.
    #[arg(long)]
    pub export_clicks: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ClickFormat {
    Bin,
    Text,
}

#[derive(Debug, clap::Args)]
pub struct ClicksArgs {
    #[command(flatten)]
    pub sim: SimArgs,
    #[arg(long, value_enum, default_value = "bin")]
    pub format: ClickFormat,
}

struct Simulated {
    a: ClickStream,
    b: ClickStream,
    spec: TraceSpec,
    bin: f64,
}

fn simulate(args: &SimArgs, ctx: &mut Context, report: &mut Report) -> Result<Simulated, CliError> {
    let duration = quantity(&args.duration, Dim::Time, "--duration")?;
    let rate = quantity(&args.rate, Dim::Frequency, "--rate")?;
    let bin = quantity(&args.bin, Dim::Time, "--bin")?;
    let (regime, tau) = match args.regime {
        Light::Below => {
            let tau = match (&args.tau_c, args.washout_peak) {
                (Some(_), Some(_)) => return Err(CliError::Usage("give either --tau-c or --washout-peak".into())),
                (Some(t), None) => quantity(t, Dim::Time, "--tau-c")?,
                (None, Some(peak)) => washout_coherence_time(peak, bin)?,
                (None, None) => {
                    let op = ctx.config.operating_point();
                    let model = ctx.model()?;
                    let gain = model.mode_gain(&op, 0)?.total;
                    thermal_coherence_time(model.kappa(), gain).map_err(|e| {
                        CliError::Physics(format!("{e}; the configured operating point lases, choose a lower pump power"))
                    })?
                }
            };
            (Regime::Thermal, tau)
        }
        Light::Above => (Regime::Laser, quantity(&args.ripple_time, Dim::Time, "--ripple-time")?),
        Light::Poisson => (Regime::Poisson, 0.0),
    };
    let sample_period = match &args.sample_period {
        Some(s) => quantity(s, Dim::Time, "--sample-period")?,
        None if regime == Regime::Thermal => tau / 10.0,
        None => 1e-5,
    };
    let spec = TraceSpec {
        ripple: args.ripple,
        ..TraceSpec::new(regime, rate, tau, duration, sample_period)
    };
    let seed = ctx.config.seed();
    let trace = simulate_intensity(&spec, seed)?;
    let (a, b) = poissonize(&trace, seed)?;
    report.result("coherence_time_s", tau);
    report.result("sample_period_s", sample_period);
    report.result("clicks.det0", a.len() as f64);
    report.result("clicks.det1", b.len() as f64);
    report.summary.push(format!(
        "{} light, tau_c {tau:.4e} s, {} + {} clicks over {duration} s",
        regime.name(),
        a.len(),
        b.len()
    ));
    Ok(Simulated { a, b, spec, bin })
}

fn stream_bytes(s: &ClickStream, format: ClickFormat) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    match format {
        ClickFormat::Bin => s.write_binary(&mut buf)?,
        ClickFormat::Text => s.write_text(&mut buf)?,
    }
    Ok(buf)
}

pub fn run_g2(args: &G2Args, ctx: &mut Context) -> Result<Report, CliError> {
    let mut report = Report::default();
    let sim = simulate(&args.sim, ctx, &mut report)?;
    let max_lag = quantity(&args.max_lag, Dim::Time, "--max-lag")?;
    let r = g2_cross(&sim.a, &sim.b, sim.bin, max_lag)?;
    let mut table = Table::new(["tau_s", "g2", "uncertainty", "counts", "expected"]);
    for i in 0..r.lags.len() {
        table.push(vec![
            Cell::Num(r.lags[i]),
            Cell::Num(r.g2[i]),
            Cell::Num(r.uncertainty[i]),
            Cell::Int(r.counts[i]),
            Cell::Num(r.expected[i]),
        ]);
    }
    report.primary = table.to_csv()?;
    let c = r.central_index();
    report.result("g2_zero", r.g2[c]);
    report.result("g2_zero_uncertainty", r.uncertainty[c]);
    report.result("max_abs_deviation", r.max_deviation(f64::INFINITY));
    report.summary.push(format!(
        "g2(0) = {:.5} ± {:.5}, max |g2 − 1| = {:.3e} over ±{max_lag:e} s",
        r.g2[c],
        r.uncertainty[c],
        r.max_deviation(f64::INFINITY)
    ));
    if sim.spec.regime == Regime::Thermal {
        let predicted = binning_washout(sim.spec.coherence_time, r.bin_width)?;
        report.result("washout_prediction", predicted);
        report.summary.push(format!("bin-averaged prediction g2(0) = {predicted:.5}"));
    }
    if args.export_clicks {
        report.extra_files.push((".det0.clks".into(), stream_bytes(&sim.a, ClickFormat::Bin)?));
        report.extra_files.push((".det1.clks".into(), stream_bytes(&sim.b, ClickFormat::Bin)?));
    }
    Ok(report)
}

pub fn run_clicks(args: &ClicksArgs, ctx: &mut Context) -> Result<Report, CliError> {
    let mut report = Report::default();
    let sim = simulate(&args.sim, ctx, &mut report)?;
    let ext = match args.format {
        ClickFormat::Bin => "clks",
        ClickFormat::Text => "txt",
    };
    let mut table = Table::new(["detector_id", "count", "duration_ns", "rate_per_s"]);
    for s in [&sim.a, &sim.b] {
        table.push(vec![
            Cell::Int(u64::from(s.detector_id)),
            Cell::Int(s.len() as u64),
            Cell::Int(s.duration_ns()),
            Cell::Num(s.rate()),
        ]);
        report.extra_files.push((format!(".det{}.{ext}", s.detector_id), stream_bytes(s, args.format)?));
    }
    report.primary = table.to_csv()?;
    Ok(report)
}
