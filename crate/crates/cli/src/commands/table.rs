//! Selection-rule table: B direction × pump polarization → driven
//! transitions and cavity output polarization.

use virtlase_core::geometry::{selection_rules, LabFrame, SelectionRow, Vec3};

use super::Report;
use crate::config::parse_polarization;
use crate::error::CliError;

#[derive(Debug, clap::Args)]
pub struct TableArgs {
    /// Extra field direction `x,y,z` (lab frame, cavity along x);
    /// repeatable. Rows are appended after the standard five.
    #[arg(long = "b-direction", allow_hyphen_values = true)]
    pub b_directions: Vec<String>,
    /// Pump polarizations for the extra rows.
    #[arg(long = "pump", default_values = ["0", "90"], allow_hyphen_values = true)]
    pub pumps: Vec<String>,
}

const TRANSITIONS: [&str; 3] = ["σ-", "π", "σ+"];
const EMPTY: &str = "---";

fn render_row(b: &str, pump: &str, row: &SelectionRow) -> String {
    let mut line = format!("{b:<9}{pump:<11}");
    for (i, name) in TRANSITIONS.iter().enumerate() {
        line.push_str(&format!("{:<5}", if row.excited[i] { name } else { EMPTY }));
    }
    line.push_str("  ");
    for label in &row.output {
        line.push_str(&format!("{:<5}", label.short()));
    }
    line.trim_end().to_string() + "\n"
}

/// Rows for one field over a set of linear pump angles; equal consecutive
/// angles collapse into a `first..last` range.
fn field_rows(b: &Vec3, b_label: &str, angles: &[f64]) -> Result<String, CliError> {
    let axis = LabFrame::cavity_axis();
    let rows = angles
        .iter()
        .map(|&a| selection_rules(b, &virtlase_core::geometry::Jones::linear(a), &axis))
        .collect::<Result<Vec<_>, _>>()?;
    let mut out = String::new();
    let mut start = 0;
    while start < rows.len() {
        let mut end = start;
        while end + 1 < rows.len() && rows[end + 1] == rows[start] {
            end += 1;
        }
        let pump = if end == start {
            format!("{}°", angles[start])
        } else {
            format!("{}°..{}°", angles[start], angles[end])
        };
        out.push_str(&render_row(b_label, &pump, &rows[start]));
        start = end + 1;
    }
    Ok(out)
}

pub fn standard_table() -> Result<String, CliError> {
    let mut out = format!("{:<9}{:<11}{:<15}  {}\n", "B-field", "pump pol.", "excited", "cavity output");
    out.push_str(&format!("{:<9}{:<11}{:<15}  {}\n", "-------", "---------", "-------", "-------------"));
    // Along the cavity axis the output depends on the pump angle only
    // through which transitions it drives: 0° and 90° are the pure cases.
    out.push_str(&field_rows(&Vec3::x(), "->", &[0.0, 90.0])?);
    let sweep: Vec<f64> = (0..=6).map(|i| 15.0 * i as f64).collect();
    out.push_str(&field_rows(&Vec3::z(), "^", &sweep)?);
    out.push_str(&field_rows(&Vec3::y(), "(.)", &[0.0, 90.0])?);
    Ok(out)
}

fn parse_direction(text: &str) -> Result<Vec3, CliError> {
    let parts = text
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| CliError::Usage(format!("--b-direction expects x,y,z, got {text:?}")))?;
    match parts[..] {
        [x, y, z] if [x, y, z].iter().all(|v| v.is_finite()) => Ok(Vec3::new(x, y, z)),
        _ => Err(CliError::Usage(format!("--b-direction expects x,y,z, got {text:?}"))),
    }
}

pub fn run(args: &TableArgs) -> Result<Report, CliError> {
    let mut text = standard_table()?;
    let axis = LabFrame::cavity_axis();
    for dir in &args.b_directions {
        let b = parse_direction(dir)?;
        let label = format!("({dir})").replace(' ', "");
        for pump in &args.pumps {
            let jones = parse_polarization(pump).map_err(CliError::Usage)?;
            let row = selection_rules(&b, &jones, &axis)?;
            let pump_label = pump.parse::<f64>().map_or(pump.clone(), |a| format!("{a}°"));
            text.push_str(&render_row(&label, &pump_label, &row));
        }
    }
    Ok(Report {
        primary: text.into_bytes(),
        ..Report::default()
    })
}
