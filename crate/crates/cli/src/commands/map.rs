use virtlase_core::gain::{detuning_map, ScanAxis};

use super::{quantity, Context, Report};
use crate::config::Dim;
use crate::error::CliError;
use crate::output::{Cell, Table};

#[derive(Debug, clap::Args)]
pub struct MapArgs {
    #[arg(long, default_value = "-10 MHz", allow_hyphen_values = true)]
    pub pump_from: String,
    #[arg(long, default_value = "10 MHz", allow_hyphen_values = true)]
    pub pump_to: String,
    #[arg(long, default_value = "1 MHz", allow_hyphen_values = true)]
    pub pump_step: String,
    #[arg(long, default_value = "-60 MHz", allow_hyphen_values = true)]
    pub cavity_from: String,
    #[arg(long, default_value = "0 MHz", allow_hyphen_values = true)]
    pub cavity_to: String,
    #[arg(long, default_value = "1 MHz", allow_hyphen_values = true)]
    pub cavity_step: String,
}

/// `Ok(None)` for a zero-width range.
fn axis(from: &str, to: &str, step: &str, what: &str) -> Result<Option<ScanAxis>, CliError> {
    let from = quantity(from, Dim::Frequency, what)?;
    let to = quantity(to, Dim::Frequency, what)?;
    let step = quantity(step, Dim::Frequency, what)?;
    if !(step > 0.0) || to < from {
        return Err(CliError::Usage(format!("{what}: malformed range {from:e}..{to:e} step {step:e}")));
    }
    if from == to {
        return Ok(None);
    }
    ScanAxis::new(from, to, step).map(Some).map_err(|e| CliError::Usage(e.to_string()))
}

pub fn run(args: &MapArgs, ctx: &mut Context) -> Result<Report, CliError> {
    let pump = axis(&args.pump_from, &args.pump_to, &args.pump_step, "pump range")?;
    let cavity = axis(&args.cavity_from, &args.cavity_to, &args.cavity_step, "cavity range")?;
    let families = ctx.config.map_families();
    let mut columns: Vec<String> = ["pump_detuning_hz", "cavity_detuning_hz", "power_w", "lasing"].map(String::from).to_vec();
    columns.extend(families.iter().map(|n| format!("power_tem{n}_w")));
    let mut table = Table::new(columns);
    let (Some(pump), Some(cavity)) = (pump, cavity) else {
        let mut report = Report::table(&table)?;
        report.summary.push("zero-area range: empty map".into());
        return Ok(report);
    };
    let model = ctx.map_model()?;
    let op = ctx.config.operating_point();
    let map = detuning_map(&model, &op, &pump, &cavity)?;
    for cell in &map.cells {
        let mut row = vec![
            Cell::Num(cell.pump_detuning),
            Cell::Num(cell.cavity_detuning),
            cell.power.into(),
            Cell::Int(u64::from(cell.lasing)),
        ];
        match &cell.family_powers {
            Some(p) => row.extend(p.iter().map(|&x| Cell::Num(x))),
            None => row.extend(families.iter().map(|_| Cell::Missing)),
        }
        table.push(row);
    }
    let mut report = Report::table(&table)?;
    let lobes = map.lobes();
    report.result("lobes", lobes.len() as f64);
    report.summary.push(format!("{} above-threshold lobe(s)", lobes.len()));
    for (i, lobe) in lobes.iter().enumerate() {
        report.result(format!("lobe.{i}.pump_detuning_hz"), lobe.peak_pump);
        report.result(format!("lobe.{i}.cavity_detuning_hz"), lobe.peak_cavity);
        report.result(format!("lobe.{i}.power_w"), lobe.peak_power);
        report.result(format!("lobe.{i}.cells"), lobe.cells as f64);
        if let Some(w) = lobe.cavity_fwhm {
            report.result(format!("lobe.{i}.cavity_fwhm_hz"), w);
        }
        report.summary.push(format!(
            "lobe {i}: peak at pump {:+.3} MHz, cavity {:+.3} MHz, {:.3e} W, cavity FWHM {}",
            lobe.peak_pump / 1e6,
            lobe.peak_cavity / 1e6,
            lobe.peak_power,
            lobe.cavity_fwhm.map_or("n/a".into(), |w| format!("{:.2} MHz", w / 1e6)),
        ));
    }
    Ok(report)
}
