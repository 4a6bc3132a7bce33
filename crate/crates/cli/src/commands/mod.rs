pub mod map;
pub mod shift;
pub mod stats;
pub mod table;
pub mod threshold;

use std::path::PathBuf;

use virtlase_core::gain::{calibrate, CalibrationConstants, GainModel};

use crate::config::{parse_quantity, Dim, RunConfig};
use crate::error::CliError;
use crate::output::{KeyValues, Table};
use crate::Command;

/// What a command produced, before anything touches the filesystem.
#[derive(Debug, Default)]
pub struct Report {
    pub primary: Vec<u8>,
    /// (path suffix, contents) written next to the primary output.
    pub extra_files: Vec<(String, Vec<u8>)>,
    /// Derived numbers recorded as `result.*` in the metadata.
    pub results: Vec<(String, String)>,
    /// Human-readable lines for stderr.
    pub summary: Vec<String>,
}

impl Report {
    pub fn table(table: &Table) -> Result<Self, CliError> {
        Ok(Self {
            primary: table.to_csv()?,
            ..Self::default()
        })
    }

    pub fn result(&mut self, key: impl Into<String>, value: f64) {
        self.results.push((key.into(), format!("{value:e}")));
    }
}

pub struct Context {
    pub config: RunConfig,
    calibration_file: Option<PathBuf>,
    model: Option<GainModel>,
    /// Calibration provenance for the metadata.
    pub meta: KeyValues,
}

impl Context {
    pub fn new(config: RunConfig, calibration_file: Option<PathBuf>) -> Self {
        Self {
            config,
            calibration_file,
            model: None,
            meta: KeyValues::default(),
        }
    }

    fn constants(&self) -> Result<(CalibrationConstants, &'static str), CliError> {
        match &self.calibration_file {
            Some(path) => Ok((read_calibration(path, &self.config)?, "file")),
            None => {
                let constants = calibrate(&self.config.apparatus()?, &self.config.calibration_targets())?;
                Ok((constants, "computed"))
            }
        }
    }

    /// Calibrated model over the configured families.
    pub fn model(&mut self) -> Result<&GainModel, CliError> {
        if self.model.is_none() {
            let (c, source) = self.constants()?;
            self.meta.push("calibration.source", source);
            self.meta.push("calibration.gain_scale", format!("{:e}", c.gain_scale));
            self.meta.push("calibration.saturation_photons", format!("{:e}", c.saturation_photons));
            self.meta.push("calibration.virtual_level_offset", format!("{:e}", c.virtual_level_offset));
            self.model = Some(GainModel::new(self.config.apparatus()?, c)?);
        }
        Ok(self.model.as_ref().expect("set above"))
    }

    /// Calibrated model restricted to the map/scan families.
    pub fn map_model(&mut self) -> Result<GainModel, CliError> {
        let families = self.config.map_families();
        Ok(self.model()?.with_families(&families)?)
    }
}

pub fn dispatch(command: &Command, ctx: &mut Context) -> Result<Report, CliError> {
    match command {
        Command::Calibrate => calibrate_cmd(ctx),
        Command::Map(a) => map::run(a, ctx),
        Command::Threshold(a) => threshold::run(a, ctx),
        Command::ShiftScan(a) => shift::run(a, ctx),
        Command::PolarizationTable(a) => table::run(a),
        Command::G2(a) => stats::run_g2(a, ctx),
        Command::Clicks(a) => stats::run_clicks(a, ctx),
        Command::Replay(_) => Err(CliError::Usage("replay cannot be nested".into())),
    }
}

pub fn quantity(text: &str, dim: Dim, what: &str) -> Result<f64, CliError> {
    parse_quantity(text, dim).map_err(|e| CliError::Usage(format!("{what}: {e}")))
}

const CALIBRATION_HEADER: &str = "# virtlase calibration";

fn calibrate_cmd(ctx: &mut Context) -> Result<Report, CliError> {
    let targets = ctx.config.calibration_targets();
    let model = ctx.model()?.clone();
    let c = *model.calibration();
    let mut kv = KeyValues::default();
    kv.push("version", env!("CARGO_PKG_VERSION"));
    kv.push("apparatus_sha256", ctx.config.apparatus_hash());
    kv.push("gain_scale", format!("{:e}", c.gain_scale));
    kv.push("saturation_photons", format!("{:e}", c.saturation_photons));
    kv.push("virtual_level_offset", format!("{:e}", c.virtual_level_offset));
    kv.push("anchor.threshold_coupled_atoms", format!("{:e}", targets.threshold_coupled_atoms));
    kv.push("anchor.threshold_pump_detuning_hz", format!("{:e}", targets.threshold_point.pump_detuning));
    kv.push("anchor.reference_photons", format!("{:e}", targets.reference_photons));
    kv.push("anchor.photon_pump_detuning_hz", format!("{:e}", targets.photon_point.pump_detuning));
    kv.push("anchor.photon_pump_power_w", format!("{:e}", targets.photon_point.pump_power));
    let mut report = Report {
        primary: format!("{CALIBRATION_HEADER}\n{}", kv.render()).into_bytes(),
        ..Report::default()
    };
    report.summary.push(format!("gain_scale = {:e}", c.gain_scale));
    report.summary.push(format!("saturation_photons = {:e}", c.saturation_photons));
    Ok(report)
}

/// Loads a calibration file, refusing one made for a different physics
/// configuration.
pub fn read_calibration(path: &std::path::Path, config: &RunConfig) -> Result<CalibrationConstants, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    if !text.starts_with(CALIBRATION_HEADER) {
        return Err(CliError::Integrity(format!("{} is not a calibration file", path.display())));
    }
    let kv = KeyValues::parse(&text)?;
    if kv.get("apparatus_sha256") != Some(config.apparatus_hash().as_str()) {
        return Err(CliError::Integrity(format!(
            "calibration {} was made for a different apparatus (stale config hash)",
            path.display()
        )));
    }
    let field = |k: &str| -> Result<f64, CliError> {
        kv.get(k)
            .and_then(|v| v.parse::<f64>().ok())
            .ok_or_else(|| CliError::Integrity(format!("calibration file lacks a numeric {k}")))
    };
    let c = CalibrationConstants {
        gain_scale: field("gain_scale")?,
        saturation_photons: field("saturation_photons")?,
        virtual_level_offset: field("virtual_level_offset")?,
    };
    c.validate().map_err(|e| CliError::Integrity(e.to_string()))?;
    Ok(c)
}
