use clap::ValueEnum;
use virtlase_core::gain::{ScanAxis, ThresholdVariable};

use super::{quantity, Context, Report};
use crate::config::Dim;
use crate::error::CliError;
use crate::output::{Cell, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Vary {
    /// Atoms coupled to TEM₀.
    Atoms,
    /// Pump power.
    Pump,
}

#[derive(Debug, clap::Args)]
pub struct ThresholdArgs {
    #[arg(long, value_enum)]
    pub vary: Vary,
    /// Defaults: 0 atoms / 0 W.
    #[arg(long, allow_hyphen_values = true)]
    pub from: Option<String>,
    /// Defaults: 40000 atoms / 8 mW.
    #[arg(long, allow_hyphen_values = true)]
    pub to: Option<String>,
    /// Defaults: 250 atoms / 0.05 mW.
    #[arg(long, allow_hyphen_values = true)]
    pub step: Option<String>,
}

pub fn run(args: &ThresholdArgs, ctx: &mut Context) -> Result<Report, CliError> {
    let (dim, var, defaults, column) = match args.vary {
        Vary::Atoms => (Dim::Number, ThresholdVariable::CoupledAtoms, ("0", "40000", "250"), "coupled_atoms"),
        Vary::Pump => (Dim::Power, ThresholdVariable::PumpPower, ("0 W", "8 mW", "0.05 mW"), "pump_power_w"),
    };
    let from = quantity(args.from.as_deref().unwrap_or(defaults.0), dim, "--from")?;
    let to = quantity(args.to.as_deref().unwrap_or(defaults.1), dim, "--to")?;
    let step = quantity(args.step.as_deref().unwrap_or(defaults.2), dim, "--step")?;
    if from < 0.0 {
        return Err(CliError::Usage("threshold scans start at a non-negative value".into()));
    }
    let axis = ScanAxis::new(from, to, step).map_err(|e| CliError::Usage(e.to_string()))?;
    let op = ctx.config.operating_point();
    let model = ctx.model()?.clone();
    let orders = model.families();

    let mut columns = vec![column.to_string(), "power_w".into()];
    for n in &orders {
        columns.push(format!("photons_tem{n}"));
        columns.push(format!("power_tem{n}_w"));
        columns.push(format!("lasing_tem{n}"));
    }
    let mut table = Table::new(columns);
    let mut onset: Vec<Option<f64>> = vec![None; orders.len()];
    for x in axis.values() {
        let point = model.apply_variable(&op, var, x);
        let mut row = vec![Cell::Num(x)];
        match model.steady_state(&point) {
            Ok(sol) => {
                row.push(Cell::Num(sol.total_power));
                for (i, f) in sol.families.iter().enumerate() {
                    row.extend([Cell::Num(f.photons), Cell::Num(f.output_power), Cell::Int(u64::from(f.lasing))]);
                    if f.lasing && onset[i].is_none() {
                        onset[i] = Some(x);
                    }
                }
            }
            Err(_) => row.extend(std::iter::repeat_n(Cell::Missing, 1 + 3 * orders.len())),
        }
        table.push(row);
    }
    let mut report = Report::table(&table)?;
    let unit = if args.vary == Vary::Atoms { "" } else { " W" };
    for (i, &n) in orders.iter().enumerate() {
        match model.threshold(var, &op, n) {
            Ok(t) => {
                report.result(format!("threshold.tem{n}"), t);
                report.summary.push(format!("TEM{n}: threshold {t:.6e}{unit}"));
            }
            Err(virtlase_core::Error::NoThreshold { .. }) => report.summary.push(format!("TEM{n}: no threshold in range")),
            Err(e) => return Err(e.into()),
        }
        if let Some(x) = onset[i] {
            report.result(format!("onset.tem{n}"), x);
            report.summary.push(format!("TEM{n}: lasing from {x:.6e}{unit} on the grid"));
        }
    }
    Ok(report)
}
