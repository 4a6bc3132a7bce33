//! Flat `key = value` run configuration.
//!
//! Values may carry a unit suffix (`7 mW`, `-35MHz`, `36 G/cm`, `90 um`).
//! A bare number is read in the key's base unit: Hz, W, G, G/m, m, K or s.
//! Unknown keys are rejected. The canonical snapshot writes every key in
//! base units with round-trip precision, so parsing a snapshot reproduces
//! the configuration exactly.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use sha2::{Digest, Sha256};
use virtlase_core::atomics::AtomEnsemble;
use virtlase_core::gain::{Apparatus, CalibrationTargets, OperatingPoint};
use virtlase_core::geometry::{CavityGeometry, Jones, MagneticEnvironment, Vec3};
use virtlase_core::units::angular;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dim {
    Number,
    Frequency,
    Power,
    Field,
    Gradient,
    Length,
    Temperature,
    Time,
}

impl Dim {
    fn units(self) -> &'static [(&'static str, f64)] {
        match self {
            Dim::Number => &[],
            Dim::Frequency => &[("Hz", 1.0), ("kHz", 1e3), ("MHz", 1e6), ("GHz", 1e9)],
            Dim::Power => &[("W", 1.0), ("mW", 1e-3), ("uW", 1e-6), ("μW", 1e-6), ("µW", 1e-6), ("nW", 1e-9)],
            Dim::Field => &[("G", 1.0), ("mG", 1e-3), ("T", 1e4)],
            Dim::Gradient => &[("G/m", 1.0), ("G/cm", 100.0), ("T/m", 1e4)],
            Dim::Length => &[("m", 1.0), ("cm", 1e-2), ("mm", 1e-3), ("um", 1e-6), ("μm", 1e-6), ("µm", 1e-6), ("nm", 1e-9)],
            Dim::Temperature => &[("K", 1.0), ("mK", 1e-3), ("uK", 1e-6), ("μK", 1e-6), ("µK", 1e-6)],
            Dim::Time => &[("s", 1.0), ("ms", 1e-3), ("us", 1e-6), ("μs", 1e-6), ("µs", 1e-6), ("ns", 1e-9)],
        }
    }
}

/// Splits `number [unit]` at the longest numeric prefix.
fn split_number(text: &str) -> Result<(f64, &str), String> {
    let text = text.trim();
    let split = (1..=text.len())
        .rev()
        .filter(|&i| text.is_char_boundary(i))
        .find(|&i| text[..i].trim_end().parse::<f64>().is_ok())
        .ok_or_else(|| format!("not a number: {text:?}"))?;
    let value = text[..split].trim_end().parse().expect("checked above");
    Ok((value, text[split..].trim()))
}

/// Parses `number [unit]` into base units.
pub fn parse_quantity(text: &str, dim: Dim) -> Result<f64, String> {
    let (value, unit) = split_number(text)?;
    if !value.is_finite() {
        return Err(format!("not a finite number: {text:?}"));
    }
    if unit.is_empty() {
        return Ok(value);
    }
    dim.units()
        .iter()
        .find(|(u, _)| *u == unit)
        .map(|(_, scale)| value * scale)
        .ok_or_else(|| format!("unit {unit:?} not valid here"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Scalar(Dim),
    Vector(Dim),
    Orders,
    Polarization,
    Flag,
    Integer,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Scalar(f64),
    Vector([f64; 3]),
    Orders(Vec<u32>),
    /// Linear angle in degrees, or circular with the given sense.
    Polarization(Polarization),
    Flag(bool),
    Integer(u64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Polarization {
    Linear(f64),
    Circular(bool),
}

impl Polarization {
    pub fn jones(self) -> Jones {
        match self {
            Polarization::Linear(deg) => Jones::linear(deg),
            Polarization::Circular(positive) => Jones::circular(positive),
        }
    }
}

struct KeySpec {
    name: &'static str,
    kind: Kind,
    default: &'static str,
}

const fn key(name: &'static str, kind: Kind, default: &'static str) -> KeySpec {
    KeySpec { name, kind, default }
}

/// Knobs of the operating point. A calibration stays valid when they change.
const OPERATING_KEYS: &[&str] = &[
    "atoms.total",
    "mot.detuning",
    "mot.saturation",
    "pump.power",
    "pump.detuning",
    "pump.polarization",
    "cavity.detuning",
    "b.offset",
];

const KEYS: &[KeySpec] = &[
    key("atoms.total", Kind::Scalar(Dim::Number), "1e7"),
    key("cloud.radius", Kind::Scalar(Dim::Length), "1 mm"),
    key("cloud.temperature", Kind::Scalar(Dim::Temperature), "2 mK"),
    key("mot.gradient", Kind::Scalar(Dim::Gradient), "36 G/cm"),
    key("mot.detuning", Kind::Scalar(Dim::Frequency), "-35 MHz"),
    key("mot.saturation", Kind::Scalar(Dim::Number), "3"),
    key("pump.power", Kind::Scalar(Dim::Power), "7 mW"),
    key("pump.waist", Kind::Scalar(Dim::Length), "2.4 mm"),
    key("pump.detuning", Kind::Scalar(Dim::Frequency), "5 MHz"),
    key("pump.polarization", Kind::Polarization, "90"),
    key("cavity.detuning", Kind::Scalar(Dim::Frequency), "-30 MHz"),
    key("cavity.kappa", Kind::Scalar(Dim::Frequency), "70 kHz"),
    key("cavity.coupling", Kind::Scalar(Dim::Frequency), "30 kHz"),
    key("cavity.waist", Kind::Scalar(Dim::Length), "90 um"),
    key("cavity.length", Kind::Scalar(Dim::Length), "4.78 cm"),
    key("cavity.output_fraction", Kind::Scalar(Dim::Number), "0.05"),
    key("cavity.family_spacing", Kind::Scalar(Dim::Frequency), "6.9 MHz"),
    key("cavity.family_step", Kind::Integer, "37"),
    key("b.offset", Kind::Vector(Dim::Field), "2.38, 0, 0 G"),
    key("active.position", Kind::Vector(Dim::Length), "0, 0, 0 m"),
    key("model.families", Kind::Orders, "0, 37, 74, 111"),
    key("model.doppler", Kind::Flag, "true"),
    key("map.families", Kind::Orders, "0"),
    key("calibration.threshold_atoms", Kind::Scalar(Dim::Number), "5000"),
    key("calibration.reference_photons", Kind::Scalar(Dim::Number), "6e5"),
    key("calibration.photon_pump_detuning", Kind::Scalar(Dim::Frequency), "6.7 MHz"),
    key("calibration.photon_pump_power", Kind::Scalar(Dim::Power), "3.5 mW"),
    key("calibration.virtual_level_offset", Kind::Scalar(Dim::Frequency), "0 MHz"),
    key("seed", Kind::Integer, "0"),
];

fn parse_value(kind: Kind, text: &str) -> Result<Value, String> {
    let text = text.trim();
    match kind {
        Kind::Scalar(dim) => parse_quantity(text, dim).map(Value::Scalar),
        Kind::Vector(dim) => {
            let parts: Vec<&str> = text.split(',').collect();
            if parts.len() != 3 {
                return Err(format!("expected three comma-separated components, got {text:?}"));
            }
            // A trailing unit applies to every component without its own.
            let (_, shared) = split_number(parts[2])?;
            let mut v = [0.0; 3];
            for (slot, part) in v.iter_mut().zip(&parts) {
                let (_, own) = split_number(part)?;
                let joined = if own.is_empty() { format!("{} {shared}", part.trim()) } else { part.to_string() };
                *slot = parse_quantity(&joined, dim)?;
            }
            Ok(Value::Vector(v))
        }
        Kind::Orders => {
            let orders = text
                .split(',')
                .map(|p| p.trim().parse::<u32>().map_err(|_| format!("not a mode order: {p:?}")))
                .collect::<Result<Vec<_>, _>>()?;
            if orders.is_empty() {
                return Err("at least one mode family required".into());
            }
            Ok(Value::Orders(orders))
        }
        Kind::Polarization => match text {
            "circular+" | "sigma+" => Ok(Value::Polarization(Polarization::Circular(true))),
            "circular-" | "sigma-" => Ok(Value::Polarization(Polarization::Circular(false))),
            _ => {
                let deg = text.strip_suffix("deg").or_else(|| text.strip_suffix('°')).unwrap_or(text);
                deg.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|d| d.is_finite())
                    .map(|d| Value::Polarization(Polarization::Linear(d)))
                    .ok_or_else(|| format!("polarization must be an angle in degrees or circular+/circular-, got {text:?}"))
            }
        },
        Kind::Flag => match text {
            "true" | "yes" | "on" => Ok(Value::Flag(true)),
            "false" | "no" | "off" => Ok(Value::Flag(false)),
            _ => Err(format!("expected true or false, got {text:?}")),
        },
        Kind::Integer => text.parse::<u64>().map(Value::Integer).map_err(|_| format!("not a non-negative integer: {text:?}")),
    }
}

fn render(value: &Value) -> String {
    match value {
        Value::Scalar(x) => format!("{x:e}"),
        Value::Vector(v) => format!("{:e}, {:e}, {:e}", v[0], v[1], v[2]),
        Value::Orders(o) => o.iter().map(u32::to_string).collect::<Vec<_>>().join(", "),
        Value::Polarization(Polarization::Linear(d)) => format!("{d:e}"),
        Value::Polarization(Polarization::Circular(true)) => "circular+".into(),
        Value::Polarization(Polarization::Circular(false)) => "circular-".into(),
        Value::Flag(b) => b.to_string(),
        Value::Integer(i) => i.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<&'static str, Value>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let values = KEYS
            .iter()
            .map(|k| (k.name, parse_value(k.kind, k.default).expect("built-in default parses")))
            .collect();
        Self { values }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut config = Self::default();
        let mut seen = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("config line {}: expected key = value", n + 1)))?;
            let k = k.trim();
            if seen.insert(k.to_string(), n + 1).is_some() {
                return Err(CliError::Usage(format!("config line {}: duplicate key {k:?}", n + 1)));
            }
            config.set(k, v).map_err(|e| CliError::Usage(format!("config line {}: {e}", n + 1)))?;
        }
        Ok(config)
    }

    pub fn set(&mut self, name: &str, text: &str) -> Result<(), String> {
        let spec = KEYS.iter().find(|k| k.name == name).ok_or_else(|| format!("unknown key {name:?}"))?;
        let value = parse_value(spec.kind, text).map_err(|e| format!("{name}: {e}"))?;
        self.values.insert(spec.name, value);
        Ok(())
    }

    /// Every key in base units, one `key = value` line each, sorted.
    pub fn snapshot(&self) -> Vec<(&'static str, String)> {
        self.values.iter().map(|(k, v)| (*k, render(v))).collect()
    }

    /// SHA-256 over the snapshot without the seed; identifies the physics
    /// a calibration belongs to.
    pub fn physics_hash(&self) -> String {
        self.hash_where(|k| k != "seed")
    }

    /// Hash over the keys a calibration depends on: everything except the
    /// seed, the operating knobs and the map families.
    pub fn apparatus_hash(&self) -> String {
        self.hash_where(|k| k != "seed" && k != "map.families" && !OPERATING_KEYS.contains(&k))
    }

    fn hash_where(&self, keep: impl Fn(&str) -> bool) -> String {
        let mut text = String::new();
        for (k, v) in self.snapshot() {
            if keep(k) {
                writeln!(text, "{k} = {v}").expect("write to string");
            }
        }
        format!("{:x}", Sha256::digest(text.as_bytes()))
    }

    fn scalar(&self, k: &str) -> f64 {
        match self.values.get(k) {
            Some(Value::Scalar(x)) => *x,
            other => unreachable!("{k} is not a scalar: {other:?}"),
        }
    }

    fn vector(&self, k: &str) -> Vec3 {
        match self.values.get(k) {
            Some(Value::Vector(v)) => Vec3::new(v[0], v[1], v[2]),
            other => unreachable!("{k} is not a vector: {other:?}"),
        }
    }

    fn orders(&self, k: &str) -> Vec<u32> {
        match self.values.get(k) {
            Some(Value::Orders(o)) => o.clone(),
            other => unreachable!("{k} is not a list: {other:?}"),
        }
    }

    fn integer(&self, k: &str) -> u64 {
        match self.values.get(k) {
            Some(Value::Integer(i)) => *i,
            other => unreachable!("{k} is not an integer: {other:?}"),
        }
    }

    pub fn seed(&self) -> u64 {
        self.integer("seed")
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.values.insert("seed", Value::Integer(seed));
    }

    pub fn map_families(&self) -> Vec<u32> {
        self.orders("map.families")
    }

    pub fn polarization(&self) -> Polarization {
        match self.values.get("pump.polarization") {
            Some(Value::Polarization(p)) => *p,
            other => unreachable!("pump.polarization: {other:?}"),
        }
    }

    pub fn operating_point(&self) -> OperatingPoint {
        OperatingPoint {
            pump_detuning: self.scalar("pump.detuning"),
            cavity_detuning: self.scalar("cavity.detuning"),
            mot_detuning: self.scalar("mot.detuning"),
            mot_saturation: self.scalar("mot.saturation"),
            pump_power: self.scalar("pump.power"),
            pump_polarization: self.polarization().jones(),
            b_offset: self.vector("b.offset"),
            total_atoms: self.scalar("atoms.total"),
        }
    }

    pub fn apparatus(&self) -> Result<Apparatus, CliError> {
        let physics = |e: virtlase_core::Error| CliError::Usage(format!("config: {e}"));
        let base = Apparatus::default();
        let cloud = AtomEnsemble::new(self.scalar("atoms.total"), self.scalar("cloud.radius"), self.scalar("cloud.temperature"))
            .map_err(physics)?;
        let cavity = CavityGeometry {
            waist_radius: self.scalar("cavity.waist"),
            length: self.scalar("cavity.length"),
            kappa: angular(self.scalar("cavity.kappa")),
            coupling: angular(self.scalar("cavity.coupling")),
            output_fraction: self.scalar("cavity.output_fraction"),
            family_spacing: self.scalar("cavity.family_spacing"),
            family_step: u32::try_from(self.integer("cavity.family_step"))
                .map_err(|_| CliError::Usage("cavity.family_step too large".into()))?,
            ..CavityGeometry::default()
        };
        cavity.validate().map_err(physics)?;
        // Axial gradient in G/m; the core takes G/cm.
        let field = MagneticEnvironment::from_axial_gradient(self.scalar("mot.gradient") / 100.0, Vec3::zeros()).map_err(physics)?;
        let pump_waist = self.scalar("pump.waist");
        if !(pump_waist > 0.0) {
            return Err(CliError::Usage("pump.waist must be positive".into()));
        }
        Ok(Apparatus {
            cloud,
            cavity,
            field,
            active_position: self.vector("active.position"),
            pump_waist,
            doppler_broadening: matches!(self.values.get("model.doppler"), Some(Value::Flag(true))),
            families: self.orders("model.families"),
            ..base
        })
    }

    /// Anchors are evaluated at the built-in reference state, not at the
    /// configured operating point, so changing a knob never recalibrates.
    pub fn calibration_targets(&self) -> CalibrationTargets {
        let mut targets = CalibrationTargets::standard(
            &OperatingPoint::default(),
            self.scalar("calibration.photon_pump_detuning"),
            self.scalar("calibration.photon_pump_power"),
        );
        targets.threshold_coupled_atoms = self.scalar("calibration.threshold_atoms");
        targets.reference_photons = self.scalar("calibration.reference_photons");
        targets.virtual_level_offset = self.scalar("calibration.virtual_level_offset");
        targets
    }
}

/// Jones vector from a pump polarization spelled like the config value.
pub fn parse_polarization(text: &str) -> Result<Jones, String> {
    match parse_value(Kind::Polarization, text)? {
        Value::Polarization(p) => Ok(p.jones()),
        _ => unreachable!(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantities_with_units() {
        assert_eq!(parse_quantity("7 mW", Dim::Power).unwrap(), 7e-3);
        assert_eq!(parse_quantity("-35MHz", Dim::Frequency).unwrap(), -35e6);
        assert_eq!(parse_quantity("36 G/cm", Dim::Gradient).unwrap(), 3600.0);
        assert_eq!(parse_quantity("90 μm", Dim::Length).unwrap(), 90.0 * 1e-6);
        assert_eq!(parse_quantity("2.5e-3", Dim::Power).unwrap(), 2.5e-3);
        assert!(parse_quantity("7 MHz", Dim::Power).is_err());
        assert!(parse_quantity("seven", Dim::Power).is_err());
        assert!(parse_quantity("inf", Dim::Power).is_err());
        let c = RunConfig::parse("active.position = 0, 0, 1e-3\nb.offset = 1 mG, 2, 3 G").unwrap();
        assert_eq!(c.vector("active.position"), Vec3::new(0.0, 0.0, 1e-3));
        assert_eq!(c.vector("b.offset"), Vec3::new(1e-3, 2.0, 3.0));
    }

    #[test]
    fn defaults_match_core_defaults() {
        let c = RunConfig::default();
        assert_eq!(c.operating_point(), OperatingPoint::default());
        let app = c.apparatus().unwrap();
        let core = Apparatus::default();
        assert_eq!(app.cavity.kappa, core.cavity.kappa);
        assert_eq!(app.families, core.families);
        assert!((app.field.radial_gradient - core.field.radial_gradient).abs() < 1e-9);
        assert_eq!(c.map_families(), vec![0]);
    }

    #[test]
    fn snapshot_round_trips() {
        let mut c = RunConfig::parse("pump.power = 3.3 mW\nb.offset = 0, 1.5, -2 G\npump.polarization = circular-\n").unwrap();
        c.set_seed(99);
        let text: String = c.snapshot().iter().map(|(k, v)| format!("{k} = {v}\n")).collect();
        assert_eq!(RunConfig::parse(&text).unwrap(), c);
    }

    #[test]
    fn rejects_unknown_and_duplicate_keys() {
        assert!(matches!(RunConfig::parse("pump.powr = 1 mW"), Err(CliError::Usage(_))));
        assert!(RunConfig::parse("seed = 1\nseed = 2").is_err());
        assert!(RunConfig::parse("pump.power 7").is_err());
    }

    #[test]
    fn hash_ignores_seed_only() {
        let a = RunConfig::parse("seed = 1").unwrap();
        let b = RunConfig::parse("seed = 2").unwrap();
        let c = RunConfig::parse("pump.power = 6 mW").unwrap();
        assert_eq!(a.physics_hash(), b.physics_hash());
        assert_ne!(a.physics_hash(), c.physics_hash());
    }

    #[test]
    fn apparatus_hash_ignores_knobs() {
        let base = RunConfig::default();
        let knobs = RunConfig::parse("pump.power = 6 mW\npump.polarization = 0\nb.offset = 3, 0, 0 G").unwrap();
        let cavity = RunConfig::parse("cavity.kappa = 80 kHz").unwrap();
        assert_eq!(base.apparatus_hash(), knobs.apparatus_hash());
        assert_ne!(base.apparatus_hash(), cavity.apparatus_hash());
        for k in OPERATING_KEYS {
            assert!(KEYS.iter().any(|spec| spec.name == *k), "{k}");
        }
    }
}
