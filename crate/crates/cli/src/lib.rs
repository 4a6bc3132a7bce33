//! `virtlase` command-line front end.
//!
//! Every command that writes `--out PATH` also writes `PATH.meta`, which
//! records the command line, seed, calibration and full configuration
//! snapshot. `virtlase replay PATH.meta --out NEW` reruns it bit-exactly.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::commands::{Context, Report};
use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{write_file, KeyValues};

#[derive(Debug, Parser)]
#[command(name = "virtlase", version, about = "Virtual-level lasing simulator for cold Yb in a cavity")]
pub struct Cli {
    /// Run configuration (`key = value` lines); built-in defaults otherwise.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file; a `.meta` side-car is written next to it.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (results do not depend on it).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Calibration file from `virtlase calibrate`; recomputed when absent.
    #[arg(long, global = true)]
    pub calibration: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the gain scale and saturation photon number.
    Calibrate,
    /// Output power over pump × cavity detuning.
    Map(commands::map::MapArgs),
    /// Output power against atom number or pump power, with thresholds.
    Threshold(commands::threshold::ThresholdArgs),
    /// Track the power maximum against offset field or MOT detuning.
    ShiftScan(commands::shift::ShiftArgs),
    /// Excited transitions and cavity output polarization per geometry.
    PolarizationTable(commands::table::TableArgs),
    /// Simulated g²(τ) from detector clicks.
    G2(commands::stats::G2Args),
    /// Export simulated click streams.
    Clicks(commands::stats::ClicksArgs),
    /// Rerun a command from its `.meta` file.
    Replay(ReplayArgs),
}

#[derive(Debug, clap::Args)]
pub struct ReplayArgs {
    pub meta: PathBuf,
}

const GLOBAL_FLAGS: [&str; 5] = ["--config", "--seed", "--out", "--threads", "--calibration"];

/// Command-line tokens without program name and global flags, as stored in
/// the metadata.
fn command_tokens(raw: &[String]) -> Vec<String> {
    let mut out = Vec::new();
    let mut it = raw.iter().skip(1);
    while let Some(tok) = it.next() {
        if GLOBAL_FLAGS.contains(&tok.as_str()) {
            it.next();
        } else if !GLOBAL_FLAGS.iter().any(|f| tok.starts_with(&format!("{f}="))) {
            out.push(tok.clone());
        }
    }
    out
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let raw: Vec<String> = args.into_iter().map(|a| a.into().to_string_lossy().into_owned()).collect();
    let cli = match Cli::try_parse_from(&raw) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    if let Some(n) = cli.threads {
        // Ignored if a pool already exists (repeated in-process runs).
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match execute(cli, &raw) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("virtlase: {e}");
            e.exit_code()
        }
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut config = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
            RunConfig::parse(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.set_seed(seed);
    }
    Ok(config)
}

fn execute(cli: Cli, raw: &[String]) -> Result<(), CliError> {
    if let Command::Replay(args) = &cli.command {
        return replay(&args.meta, cli.out.clone());
    }
    let config = load_config(&cli)?;
    let tokens = command_tokens(raw);
    let mut ctx = Context::new(config, cli.calibration.clone());
    let report = commands::dispatch(&cli.command, &mut ctx)?;
    emit(&ctx, &tokens, report, cli.out.as_deref())
}

fn emit(ctx: &Context, tokens: &[String], report: Report, out: Option<&std::path::Path>) -> Result<(), CliError> {
    for line in &report.summary {
        eprintln!("{line}");
    }
    let Some(out) = out else {
        if !report.extra_files.is_empty() {
            return Err(CliError::Usage("this command writes several files and needs --out".into()));
        }
        std::io::stdout().write_all(&report.primary)?;
        return Ok(());
    };
    write_file(out, &report.primary)?;
    for (suffix, bytes) in &report.extra_files {
        write_file(&suffixed(out, suffix), bytes)?;
    }
    let mut meta = KeyValues::default();
    meta.push("command", tokens.first().map_or("", String::as_str));
    meta.push("version", env!("CARGO_PKG_VERSION"));
    meta.push("seed", ctx.config.seed());
    for (i, t) in tokens.iter().enumerate() {
        if t.contains('\n') {
            return Err(CliError::Usage("arguments must not contain newlines".into()));
        }
        meta.push(format!("argv.{i}"), t);
    }
    meta.push("config_sha256", ctx.config.physics_hash());
    for (k, v) in &ctx.meta.entries {
        meta.push(k.clone(), v);
    }
    for (k, v) in &report.results {
        meta.push(format!("result.{k}"), v);
    }
    for (k, v) in ctx.config.snapshot() {
        meta.push(format!("config.{k}"), v);
    }
    write_file(&suffixed(out, ".meta"), meta.render().as_bytes())
}

pub fn suffixed(path: &std::path::Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn replay(meta_path: &std::path::Path, out: Option<PathBuf>) -> Result<(), CliError> {
    let out = out.ok_or_else(|| CliError::Usage("replay needs --out".into()))?;
    let text = std::fs::read_to_string(meta_path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", meta_path.display())))?;
    let meta = KeyValues::parse(&text)?;
    let version = meta.get("version").ok_or_else(|| CliError::Integrity("metadata lacks version".into()))?;
    if version != env!("CARGO_PKG_VERSION") {
        return Err(CliError::Integrity(format!("metadata from version {version}, this is {}", env!("CARGO_PKG_VERSION"))));
    }
    let mut config = RunConfig::default();
    for (k, v) in meta.with_prefix("config.") {
        config.set(k, v).map_err(|e| CliError::Integrity(format!("metadata config: {e}")))?;
    }
    if meta.get("config_sha256") != Some(config.physics_hash().as_str()) {
        return Err(CliError::Integrity("metadata config snapshot does not match its hash".into()));
    }
    let mut argv = vec!["virtlase".to_string()];
    let mut i = 0;
    while let Some(t) = meta.get(&format!("argv.{i}")) {
        argv.push(t.to_string());
        i += 1;
    }
    let cli = Cli::try_parse_from(&argv).map_err(|e| CliError::Integrity(format!("metadata command line: {e}")))?;
    if matches!(cli.command, Command::Replay(_)) {
        return Err(CliError::Integrity("cannot replay a replay".into()));
    }
    let mut ctx = Context::new(config, None);
    let report = commands::dispatch(&cli.command, &mut ctx)?;
    for (k, v) in &ctx.meta.entries {
        if k.starts_with("calibration.") && k != "calibration.source" && meta.get(k) != Some(v.as_str()) {
            return Err(CliError::Integrity(format!("recomputed {k} = {v} differs from recorded value")));
        }
    }
    emit(&ctx, &argv[1..], report, Some(&out))
}
