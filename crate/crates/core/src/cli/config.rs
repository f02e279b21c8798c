//! Run configuration: flat `key = value` lines with `#` comments.
//!
//! Units live in the key name (`trap.fx_hz`, `pulse.duration_ms`, …). A
//! value may repeat its unit after the number (`trap.fx_hz = 112 Hz`); a
//! different unit is rejected rather than converted.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use thiserror::Error;

use crate::constants::{hz_to_angular, MICROMETRE, MICROSECOND, MILLISECOND, NANOKELVIN};
use crate::dynamics::PulseSpec;
use crate::grid::HealingCheck;
use crate::trap::{InteractionSpec, TrapSpec};

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, found `{text}`")]
    Syntax { line: usize, text: String },

    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { key: String, line: usize },

    #[error("line {line}: key `{key}` given twice (first on line {first})")]
    DuplicateKey { key: String, line: usize, first: usize },

    #[error("missing required key `{key}` for model {model}")]
    MissingKey { key: &'static str, model: Model },

    #[error("{}: `{key}` expects unit `{expected}`, found `{found}`", location(*line))]
    UnitMismatch {
        key: &'static str,
        line: Option<usize>,
        expected: &'static str,
        found: String,
    },

    #[error("{}: cannot parse `{value}` for `{key}`: {reason}", location(*line))]
    InvalidValue {
        key: &'static str,
        line: Option<usize>,
        value: String,
        reason: String,
    },

    #[error("{}: `{key}` out of range: {reason}", location(*line))]
    OutOfRange {
        key: &'static str,
        line: Option<usize>,
        reason: String,
    },

    #[error("unknown preset `{0}` (known: paper_n400, paper_n800, paper_highT)")]
    UnknownPreset(String),

    #[error("model {model} cannot run under the `{command}` command")]
    ModelMismatch { model: Model, command: &'static str },

    #[error("cannot read config {path}: {reason}")]
    Unreadable { path: String, reason: String },
}

fn location(line: Option<usize>) -> String {
    match line {
        Some(l) => format!("line {l}"),
        None => "default/preset".to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    Ground,
    Modes,
    SpectrumZeroT,
    SpectrumThermal,
    SpectrumHighT,
    Sweep,
}

impl Model {
    pub fn name(self) -> &'static str {
        match self {
            Model::Ground => "ground",
            Model::Modes => "modes",
            Model::SpectrumZeroT => "spectrum_zero_t",
            Model::SpectrumThermal => "spectrum_thermal",
            Model::SpectrumHighT => "spectrum_high_t",
            Model::Sweep => "sweep",
        }
    }

    fn parse(s: &str) -> Option<Model> {
        [
            Model::Ground,
            Model::Modes,
            Model::SpectrumZeroT,
            Model::SpectrumThermal,
            Model::SpectrumHighT,
            Model::Sweep,
        ]
        .into_iter()
        .find(|m| m.name() == s)
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Top-level CLI commands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Ground,
    Modes,
    Spectrum,
    Sweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Ground => "ground",
            Command::Modes => "modes",
            Command::Spectrum => "spectrum",
            Command::Sweep => "sweep",
        }
    }
}

struct KeySpec {
    key: &'static str,
    /// Unit tokens accepted after the number; empty for dimensionless keys.
    unit: &'static [&'static str],
    /// `None` marks a key that has to be given.
    default: Option<&'static str>,
}

const fn key(key: &'static str, unit: &'static [&'static str], default: Option<&'static str>) -> KeySpec {
    KeySpec { key, unit, default }
}

const HZ: &[&str] = &["Hz"];
const UM: &[&str] = &["um", "μm"];
const NONE: &[&str] = &[];

/// Every accepted key, in echo order.
const KEYS: &[KeySpec] = &[
    key("model", NONE, Some("")),
    key("trap.fx_hz", HZ, None),
    key("trap.fy_hz", HZ, None),
    key("trap.fz_hz", HZ, None),
    key("trap.delta_x_um", UM, Some("0")),
    key("trap.gamma_hz_per_um", &["Hz/um", "Hz/μm"], Some("0")),
    key("trap.bottom_offset_hz", HZ, Some("0")),
    key("atoms.n", NONE, None),
    key("scattering.a11_a0", &["a0"], Some("100.4")),
    key("scattering.a12_a0", &["a0"], Some("98.01")),
    key("scattering.a22_a0", &["a0"], Some("95.44")),
    key("pulse.rabi_hz", HZ, Some("3.5")),
    key("pulse.duration_ms", &["ms"], Some("140")),
    key("sweep.delta_min_hz", HZ, Some("-250")),
    key("sweep.delta_max_hz", HZ, Some("150")),
    key("sweep.points", NONE, Some("201")),
    key("grid.nx", NONE, Some("64")),
    key("grid.ny", NONE, Some("32")),
    key("grid.nz", NONE, Some("32")),
    key("grid.extent_factor", NONE, Some("6")),
    key("grid.strict_healing", NONE, Some("false")),
    key("solver.dt_imag_factor", NONE, Some("0.1")),
    key("solver.tol", NONE, Some("1e-10")),
    key("solver.dt_real_us", &["us", "μs"], Some("5")),
    key("modes.k", NONE, Some("12")),
    key("thermal.temperature_nk", &["nK"], Some("0")),
    key("workers", NONE, Some("0")),
];

fn spec_for(name: &str) -> Option<&'static KeySpec> {
    KEYS.iter().find(|k| k.key == name)
}

/// Keys shared by the published parameter sets.
const PAPER_BASE: &str = "\
trap.fx_hz = 112
trap.fy_hz = 517
trap.fz_hz = 517
trap.delta_x_um = 0.13
scattering.a11_a0 = 100.4
scattering.a12_a0 = 98.01
scattering.a22_a0 = 95.44
pulse.rabi_hz = 3.5
pulse.duration_ms = 140
";

/// Text of a named preset.
pub fn preset_text(name: &str) -> Result<String, ConfigError> {
    let extra = match name {
        "paper_n400" => "atoms.n = 400\n",
        "paper_n800" => "atoms.n = 800\n",
        "paper_highT" => {
            let base = PAPER_BASE.replace("trap.delta_x_um = 0.13", "trap.delta_x_um = 0.26");
            return Ok(format!(
                "{base}atoms.n = 630\n\
             trap.gamma_hz_per_um = 2.5\n\
             thermal.temperature_nk = 800\n\
             modes.k = 48\n\
             sweep.delta_min_hz = -450\n\
             sweep.delta_max_hz = 450\n\
             sweep.points = 1801\n\
             model = spectrum_high_t\n"
            ));
        }
        _ => return Err(ConfigError::UnknownPreset(name.to_string())),
    };
    Ok(format!("{PAPER_BASE}{extra}"))
}

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    value: String,
    /// Source line in the user text; `None` for presets.
    line: Option<usize>,
}

/// Key/value pairs collected from presets and config text, later keys
/// overriding earlier sources.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigSource {
    entries: BTreeMap<&'static str, Entry>,
}

impl ConfigSource {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_preset(mut self, name: &str) -> Result<Self, ConfigError> {
        let text = preset_text(name)?;
        let preset = Self::parse(&text)?;
        for (k, mut e) in preset.entries {
            e.line = None;
            self.entries.insert(k, e);
        }
        Ok(self)
    }

    /// Merges config text on top of what is already collected.
    pub fn with_text(mut self, text: &str) -> Result<Self, ConfigError> {
        let parsed = Self::parse(text)?;
        self.entries.extend(parsed.entries);
        Ok(self)
    }

    pub fn with_file(self, path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Unreadable {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        self.with_text(&text)
    }

    fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries: BTreeMap<&'static str, Entry> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (k, v) = content.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line,
                text: raw.trim().to_string(),
            })?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() || v.is_empty() {
                return Err(ConfigError::Syntax {
                    line,
                    text: raw.trim().to_string(),
                });
            }
            let spec = spec_for(k).ok_or_else(|| ConfigError::UnknownKey {
                key: k.to_string(),
                line,
            })?;
            if let Some(first) = entries.get(spec.key) {
                return Err(ConfigError::DuplicateKey {
                    key: k.to_string(),
                    line,
                    first: first.line.unwrap_or(0),
                });
            }
            entries.insert(
                spec.key,
                Entry {
                    value: v.to_string(),
                    line: Some(line),
                },
            );
        }
        Ok(ConfigSource { entries })
    }

    /// Resolves defaults and validates everything. `default_model` applies
    /// when no `model` key was given.
    pub fn resolve(&self, default_model: Model) -> Result<RunConfig, ConfigError> {
        let mut values = Values {
            source: self,
            resolved: Vec::new(),
            model: default_model,
        };
        let model_name = values.name("model")?;
        let model = if model_name.is_empty() {
            default_model
        } else {
            Model::parse(&model_name).ok_or_else(|| ConfigError::InvalidValue {
                key: "model",
                line: self.line("model"),
                value: model_name.clone(),
                reason: "expected ground, modes, spectrum_zero_t, spectrum_thermal, spectrum_high_t or sweep".into(),
            })?
        };
        values.resolved[0].1 = model.name().to_string();
        values.model = model;

        let fx = values.positive("trap.fx_hz")?;
        let fy = values.positive("trap.fy_hz")?;
        let fz = values.positive("trap.fz_hz")?;
        let delta_x = values.non_negative("trap.delta_x_um")? * MICROMETRE;
        let gamma = values.non_negative("trap.gamma_hz_per_um")?;
        let bottom_offset = values.real("trap.bottom_offset_hz")?;
        let trap = TrapSpec {
            fx,
            fy,
            fz,
            delta_x,
            gamma: hz_to_angular(gamma) / MICROMETRE,
            bottom_offset,
        };
        let n_atoms = values.real("atoms.n")?;
        if !(n_atoms >= 1.0) {
            return Err(values.range("atoms.n", "must be >= 1"));
        }
        let interactions = InteractionSpec {
            a11: values.real("scattering.a11_a0")?,
            a12: values.real("scattering.a12_a0")?,
            a22: values.real("scattering.a22_a0")?,
        };
        let rabi_hz = values.non_negative("pulse.rabi_hz")?;
        let duration = values.positive("pulse.duration_ms")? * MILLISECOND;
        let pulse = PulseSpec::from_hz(rabi_hz, duration, 0.0);

        let delta_min_hz = values.real("sweep.delta_min_hz")?;
        let delta_max_hz = values.real("sweep.delta_max_hz")?;
        let points = values.count("sweep.points")?;
        let needs_detunings = matches!(
            model,
            Model::Sweep | Model::SpectrumZeroT | Model::SpectrumThermal | Model::SpectrumHighT
        );
        if needs_detunings && points == 0 {
            return Err(values.range("sweep.points", "the detuning list is empty"));
        }
        if points > 1 && !(delta_max_hz > delta_min_hz) {
            return Err(values.range("sweep.delta_max_hz", "must exceed sweep.delta_min_hz"));
        }

        let dims = [values.count("grid.nx")?, values.count("grid.ny")?, values.count("grid.nz")?];
        let line = dims[1] == 1 && dims[2] == 1;
        if dims[0] < 8 || (!line && (dims[1] < 8 || dims[2] < 8)) {
            return Err(values.range(
                "grid.nx",
                "each axis needs at least 8 points (or ny = nz = 1 for the effective-1D model)",
            ));
        }
        let extent_factor = values.positive("grid.extent_factor")?;
        let healing = if values.flag("grid.strict_healing")? {
            HealingCheck::Error
        } else {
            HealingCheck::Warn
        };
        let dt_imag_factor = values.positive("solver.dt_imag_factor")?;
        let tol = values.positive("solver.tol")?;
        let dt_real = values.positive("solver.dt_real_us")? * MICROSECOND;
        let modes_k = values.count("modes.k")?;
        if modes_k == 0 || modes_k > crate::eigenmodes::MAX_MODES {
            return Err(values.range(
                "modes.k",
                format!("must be between 1 and {}", crate::eigenmodes::MAX_MODES),
            ));
        }
        let temperature = values.non_negative("thermal.temperature_nk")? * NANOKELVIN;
        if matches!(model, Model::SpectrumThermal | Model::SpectrumHighT) && temperature == 0.0 {
            if self.entries.contains_key("thermal.temperature_nk") {
                return Err(values.range("thermal.temperature_nk", format!("must be > 0 for model {model}")));
            }
            return Err(ConfigError::MissingKey {
                key: "thermal.temperature_nk",
                model,
            });
        }
        let workers = values.count("workers")?;

        Ok(RunConfig {
            model,
            trap,
            n_atoms,
            interactions,
            pulse,
            sweep: DetuningRange {
                min_hz: delta_min_hz,
                max_hz: delta_max_hz,
                points,
            },
            grid_dims: dims,
            extent_factor,
            healing,
            dt_imag_factor,
            tol,
            dt_real,
            modes_k,
            temperature,
            workers,
            resolved: values.resolved,
        })
    }

    /// Resolves for a CLI command. `ground`, `modes` and `sweep` fix the
    /// model; `spectrum` takes a spectrum model from the config (default
    /// spectrum_zero_t). A model inherited from a preset yields to the
    /// command; one written by the user must agree with it.
    pub fn resolve_for(&self, command: Command) -> Result<RunConfig, ConfigError> {
        let fixed = match command {
            Command::Ground => Some(Model::Ground),
            Command::Modes => Some(Model::Modes),
            Command::Sweep => Some(Model::Sweep),
            Command::Spectrum => None,
        };
        let written = self.entries.get("model");
        let mut source = self.clone();
        if let (Some(model), Some(entry)) = (fixed, written) {
            if entry.line.is_some() && entry.value.trim() != model.name() {
                return Err(ConfigError::ModelMismatch {
                    model: Model::parse(entry.value.trim()).unwrap_or(model),
                    command: command.name(),
                });
            }
            source.entries.remove("model");
        }
        let cfg = source.resolve(fixed.unwrap_or(Model::SpectrumZeroT))?;
        if fixed.is_none() && !matches!(cfg.model, Model::SpectrumZeroT | Model::SpectrumThermal | Model::SpectrumHighT) {
            return Err(ConfigError::ModelMismatch {
                model: cfg.model,
                command: command.name(),
            });
        }
        Ok(cfg)
    }

    fn line(&self, key: &str) -> Option<usize> {
        self.entries.get(key).and_then(|e| e.line)
    }
}

/// Reads typed values out of a [`ConfigSource`], recording each resolved
/// value for the echo.
struct Values<'a> {
    source: &'a ConfigSource,
    resolved: Vec<(&'static str, String)>,
    model: Model,
}

impl<'a> Values<'a> {
    fn raw(&mut self, key: &'static str) -> Result<(String, Option<usize>), ConfigError> {
        let spec = spec_for(key).expect("key table covers every lookup");
        let (text, line) = match self.source.entries.get(key) {
            Some(e) => (e.value.clone(), e.line),
            None => match spec.default {
                Some(d) => (d.to_string(), None),
                None => {
                    return Err(ConfigError::MissingKey {
                        key: spec.key,
                        model: self.model,
                    })
                }
            },
        };
        let value = strip_unit(spec, &text, line)?;
        Ok((value, line))
    }

    fn name(&mut self, key: &'static str) -> Result<String, ConfigError> {
        let (v, _) = self.raw(key)?;
        self.resolved.push((key, v.clone()));
        Ok(v)
    }

    fn real(&mut self, key: &'static str) -> Result<f64, ConfigError> {
        let (v, line) = self.raw(key)?;
        let x: f64 = v.parse().map_err(|e: std::num::ParseFloatError| ConfigError::InvalidValue {
            key,
            line,
            value: v.clone(),
            reason: e.to_string(),
        })?;
        if !x.is_finite() {
            return Err(ConfigError::OutOfRange {
                key,
                line,
                reason: "must be finite".into(),
            });
        }
        self.resolved.push((key, v));
        Ok(x)
    }

    fn positive(&mut self, key: &'static str) -> Result<f64, ConfigError> {
        let x = self.real(key)?;
        if !(x > 0.0) {
            return Err(self.range(key, "must be > 0"));
        }
        Ok(x)
    }

    fn non_negative(&mut self, key: &'static str) -> Result<f64, ConfigError> {
        let x = self.real(key)?;
        if !(x >= 0.0) {
            return Err(self.range(key, "must be >= 0"));
        }
        Ok(x)
    }

    fn count(&mut self, key: &'static str) -> Result<usize, ConfigError> {
        let (v, line) = self.raw(key)?;
        let n: usize = v.parse().map_err(|e: std::num::ParseIntError| ConfigError::InvalidValue {
            key,
            line,
            value: v.clone(),
            reason: e.to_string(),
        })?;
        self.resolved.push((key, v));
        Ok(n)
    }

    fn flag(&mut self, key: &'static str) -> Result<bool, ConfigError> {
        let (v, line) = self.raw(key)?;
        let b = match v.as_str() {
            "true" | "yes" | "1" => true,
            "false" | "no" | "0" => false,
            _ => {
                return Err(ConfigError::InvalidValue {
                    key,
                    line,
                    value: v,
                    reason: "expected true or false".into(),
                })
            }
        };
        self.resolved.push((key, b.to_string()));
        Ok(b)
    }

    fn range(&self, key: &'static str, reason: impl Into<String>) -> ConfigError {
        ConfigError::OutOfRange {
            key,
            line: self.source.line(key),
            reason: reason.into(),
        }
    }
}

/// Splits an optional trailing unit off `text` and checks it against the
/// key's unit.
fn strip_unit(spec: &KeySpec, text: &str, line: Option<usize>) -> Result<String, ConfigError> {
    let mut parts = text.split_whitespace();
    let value = parts.next().unwrap_or("").to_string();
    let unit: Vec<&str> = parts.collect();
    if unit.is_empty() {
        return Ok(value);
    }
    let found = unit.join(" ");
    if unit.len() == 1 && spec.unit.contains(&unit[0]) {
        return Ok(value);
    }
    Err(ConfigError::UnitMismatch {
        key: spec.key,
        line,
        expected: spec.unit.first().copied().unwrap_or("(dimensionless)"),
        found,
    })
}

/// Detuning samples for spectra and sweeps, Hz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetuningRange {
    pub min_hz: f64,
    pub max_hz: f64,
    pub points: usize,
}

impl DetuningRange {
    pub fn values(&self) -> Vec<f64> {
        match self.points {
            0 => Vec::new(),
            1 => vec![self.min_hz],
            n => {
                let step = (self.max_hz - self.min_hz) / (n - 1) as f64;
                (0..n).map(|i| self.min_hz + step * i as f64).collect()
            }
        }
    }
}

/// Fully resolved, validated run parameters.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub model: Model,
    pub trap: TrapSpec,
    pub n_atoms: f64,
    pub interactions: InteractionSpec,
    /// Detuning is filled in per sweep point.
    pub pulse: PulseSpec,
    pub sweep: DetuningRange,
    pub grid_dims: [usize; 3],
    pub extent_factor: f64,
    pub healing: HealingCheck,
    pub dt_imag_factor: f64,
    pub tol: f64,
    /// s.
    pub dt_real: f64,
    pub modes_k: usize,
    /// K.
    pub temperature: f64,
    /// 0 = one per available core.
    pub workers: usize,
    resolved: Vec<(&'static str, String)>,
}

impl RunConfig {
    /// Every key with the value actually used, in a fixed order.
    pub fn resolved(&self) -> &[(&'static str, String)] {
        &self.resolved
    }

    /// Resolved configuration as config text that parses back to the same
    /// run.
    pub fn echo(&self) -> String {
        self.resolved.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn worker_count(&self) -> usize {
        if self.workers > 0 {
            self.workers
        } else {
            std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
        }
    }
}

/// Parses config text on its own (no preset) for `default_model`.
pub fn parse_config(text: &str, default_model: Model) -> Result<RunConfig, ConfigError> {
    ConfigSource::new().with_text(text)?.resolve(default_model)
}
