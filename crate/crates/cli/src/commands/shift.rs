use clap::ValueEnum;
use virtlase_core::gain::{optimum_scan, OptimumSearch, ScanAxis, ScanVariable};
use virtlase_core::units::MHZ;

use super::{quantity, Context, Report};
use crate::config::Dim;
use crate::error::CliError;
use crate::output::{Cell, Table};

/// Measured optimum-pump shift per gauss reported by the experiment, kept
/// for comparison with the Landé slope of the model.
pub const MEASURED_ZEEMAN_SLOPE: f64 = 1.6 * MHZ;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Vary {
    /// Offset-field magnitude along the configured direction (G).
    BOffset,
    /// MOT detuning.
    MotDetuning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LobeSide {
    /// σ⁺ lobe, blue pump detuning.
    Plus,
    /// σ⁻ lobe, red pump detuning.
    Minus,
}

#[derive(Debug, clap::Args)]
pub struct ShiftArgs {
    #[arg(long, value_enum)]
    pub vary: Vary,
    /// Defaults: 2.5 G / −40 MHz.
    #[arg(long, allow_hyphen_values = true)]
    pub from: Option<String>,
    /// Defaults: 6.5 G / −20 MHz.
    #[arg(long, allow_hyphen_values = true)]
    pub to: Option<String>,
    /// Defaults: 0.5 G / 2 MHz.
    #[arg(long, allow_hyphen_values = true)]
    pub step: Option<String>,
    #[arg(long, value_enum, default_value = "plus")]
    pub lobe: LobeSide,
}

pub fn run(args: &ShiftArgs, ctx: &mut Context) -> Result<Report, CliError> {
    let (dim, var, defaults, column) = match args.vary {
        Vary::BOffset => (Dim::Field, ScanVariable::BOffset, ("2.5 G", "6.5 G", "0.5 G"), "b_offset_g"),
        Vary::MotDetuning => (Dim::Frequency, ScanVariable::MotDetuning, ("-40 MHz", "-20 MHz", "2 MHz"), "mot_detuning_hz"),
    };
    let from = quantity(args.from.as_deref().unwrap_or(defaults.0), dim, "--from")?;
    let to = quantity(args.to.as_deref().unwrap_or(defaults.1), dim, "--to")?;
    let step = quantity(args.step.as_deref().unwrap_or(defaults.2), dim, "--step")?;
    if !(to > from) || !(step > 0.0) {
        return Err(CliError::Usage(format!("empty scan range {from:e}..{to:e} step {step:e}")));
    }
    let values = ScanAxis::new(from, to, step).map_err(|e| CliError::Usage(e.to_string()))?.values();
    let mut search = OptimumSearch::default();
    if args.lobe == LobeSide::Minus {
        search.pump = ScanAxis::new(-search.pump.stop, -search.pump.start, search.pump.step).expect("mirrored default");
    }
    let model = ctx.map_model()?;
    let op = ctx.config.operating_point();
    let scan = optimum_scan(&model, &op, var, &values, &search)?;

    let mut table = Table::new([column, "pump_opt_hz", "cavity_opt_hz", "two_photon_mismatch_hz", "power_w"]);
    let mut optima = scan.optima.iter().peekable();
    for &x in &values {
        match optima.next_if(|o| o.x == x) {
            Some(o) => {
                let mot = if var == ScanVariable::MotDetuning { x } else { op.mot_detuning };
                table.push(vec![
                    Cell::Num(x),
                    Cell::Num(o.pump_detuning),
                    Cell::Num(o.cavity_detuning),
                    Cell::Num(o.cavity_detuning - o.pump_detuning - mot),
                    Cell::Num(o.power),
                ]);
            }
            None => table.push(vec![Cell::Num(x), Cell::Missing, Cell::Missing, Cell::Missing, Cell::Missing]),
        }
    }
    let mut report = Report::table(&table)?;
    report.result("missing_points", scan.missing.len() as f64);
    let x_unit = if var == ScanVariable::BOffset { "G" } else { "Hz" };
    for (name, fit) in [("pump", scan.pump_fit), ("cavity", scan.cavity_fit)] {
        if let Some(f) = fit {
            report.result(format!("fit.{name}.slope"), f.slope);
            report.result(format!("fit.{name}.intercept"), f.intercept);
            report.summary.push(format!(
                "{name} optimum: slope {:.6e} Hz/{x_unit}, intercept {:.6e} Hz ({} points)",
                f.slope, f.intercept, f.points
            ));
        }
    }
    if var == ScanVariable::BOffset {
        report.result("reference.measured_zeeman_slope_hz_per_g", MEASURED_ZEEMAN_SLOPE);
        if let Some(f) = scan.pump_fit {
            report.summary.push(format!(
                "model Zeeman slope {:.4} MHz/G vs measured {:.1} MHz/G (ratio {:.3})",
                f.slope / MHZ,
                MEASURED_ZEEMAN_SLOPE / MHZ,
                f.slope / MEASURED_ZEEMAN_SLOPE
            ));
        }
    }
    if !scan.missing.is_empty() {
        report.summary.push(format!("{} scan point(s) without lasing", scan.missing.len()));
    }
    Ok(report)
}
