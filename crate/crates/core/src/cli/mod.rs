//! Command-line plumbing: configuration, checkpoints, output files and the
//! dispatch from a resolved [`RunConfig`] to the physics modules.

pub mod checkpoint;
pub mod config;

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::constants::{joule_to_hz, PLANCK};
use crate::dynamics::sweep_detuning;
use crate::eigenmodes::{effective_potential, lowest_eigenpairs, EigenSet, PotentialModel};
use crate::error::Result;
use crate::grid::build_grid;
use crate::groundstate::{imaginary_rate, solve_groundstate, GroundState, SolverOptions};
use crate::spectra::{
    bose_occupations, convolve_lineshape, high_temperature_lines, resolved_peaks, thermal_lines, zero_temperature_lines,
    CurvePoint, Normalization, SampleGrid, Spectrum, SpectrumLine, ThermalOccupations,
};
use crate::trap::Species;

pub use config::{Command, ConfigError, ConfigSource, Model, RunConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Everything written for a spectrum in JSON form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumDocument {
    /// Resolved configuration, key → value as it would be written in a
    /// config file.
    pub config: BTreeMap<String, String>,
    pub normalization: Normalization,
    pub curve: Vec<CurvePoint>,
    pub lines: Vec<SpectrumLine>,
    /// Model-specific extras (occupations, per-point sweep errors, …).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub details: Option<serde_json::Value>,
}

fn config_map(config: Option<&RunConfig>) -> BTreeMap<String, String> {
    config
        .map(|c| c.resolved().iter().map(|(k, v)| (k.to_string(), v.clone())).collect())
        .unwrap_or_default()
}

/// Writes `spec` as CSV (`detuning_hz,amplitude`, 17 significant digits) or
/// as a JSON document that also carries the lines and the resolved config.
pub fn write_spectrum(
    spec: &Spectrum,
    path: &Path,
    format: OutputFormat,
    config: Option<&RunConfig>,
    details: Option<serde_json::Value>,
) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    match format {
        OutputFormat::Csv => {
            writeln!(out, "detuning_hz,amplitude")?;
            for p in &spec.curve {
                writeln!(out, "{:.16e},{:.16e}", p.detuning_hz, p.amplitude)?;
            }
        }
        OutputFormat::Json => {
            let doc = SpectrumDocument {
                config: config_map(config),
                normalization: spec.normalization,
                curve: spec.curve.clone(),
                lines: spec.lines.clone(),
                details,
            };
            serde_json::to_writer_pretty(&mut out, &doc)?;
            writeln!(out)?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn read_spectrum_json(path: &Path) -> Result<SpectrumDocument> {
    Ok(serde_json::from_reader(std::io::BufReader::new(File::open(path)?))?)
}

/// Reads a CSV written by [`write_spectrum`].
pub fn read_spectrum_csv(path: &Path) -> Result<Vec<CurvePoint>> {
    let text = std::fs::read_to_string(path)?;
    let bad = |line: usize| std::io::Error::new(std::io::ErrorKind::InvalidData, format!("bad CSV row {line}"));
    text.lines()
        .enumerate()
        .skip(1)
        .map(|(i, row)| {
            let (d, a) = row.split_once(',').ok_or_else(|| bad(i + 1))?;
            Ok(CurvePoint {
                detuning_hz: d.parse().map_err(|_| bad(i + 1))?,
                amplitude: a.parse().map_err(|_| bad(i + 1))?,
            })
        })
        .collect()
}

/// What a run produced.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub model: Model,
    pub mu_hz: Option<f64>,
    pub peaks_hz: Vec<f64>,
    pub runtime_s: f64,
    pub files: Vec<PathBuf>,
}

impl fmt::Display for RunSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "model={}", self.model)?;
        if let Some(mu) = self.mu_hz {
            write!(f, " mu_hz={mu:.3}")?;
        }
        let peaks: Vec<String> = self.peaks_hz.iter().map(|p| format!("{p:.2}")).collect();
        write!(f, " peaks_hz=[{}] runtime_s={:.1}", peaks.join(","), self.runtime_s)?;
        let files: Vec<String> = self.files.iter().map(|p| p.display().to_string()).collect();
        write!(f, " files=[{}]", files.join(","))
    }
}

/// Ground state on the configured grid and solver settings.
pub fn ground_state(cfg: &RunConfig) -> Result<GroundState> {
    let grid = build_grid(
        &cfg.trap,
        &cfg.interactions,
        cfg.n_atoms,
        cfg.grid_dims,
        cfg.extent_factor,
        cfg.healing,
    )?;
    let opts = SolverOptions {
        dt_imag: Some(cfg.dt_imag_factor / imaginary_rate(&cfg.trap, &cfg.interactions, cfg.n_atoms)),
        tol: cfg.tol,
        ..SolverOptions::default()
    };
    solve_groundstate(&grid, &cfg.trap, &cfg.interactions, cfg.n_atoms, &opts)
}

/// The `modes.k` lowest Hartree-Fock (species 1) or mean-field (species 2)
/// modes around `ground`.
pub fn hartree_fock_modes(cfg: &RunConfig, ground: &GroundState, species: Species) -> Result<EigenSet> {
    let pot = effective_potential(
        species,
        Some(ground),
        ground.grid(),
        &cfg.trap,
        &cfg.interactions,
        PotentialModel::HartreeFock,
    )?;
    lowest_eigenpairs(&pot, &cfg.trap, cfg.modes_k)
}

fn sample_grid(cfg: &RunConfig) -> SampleGrid {
    let r = cfg.sweep;
    let step = if r.points > 1 {
        (r.max_hz - r.min_hz) / (r.points - 1) as f64
    } else {
        1.0
    };
    SampleGrid {
        min_hz: r.min_hz,
        max_hz: r.max_hz,
        step_hz: step,
    }
}

#[derive(Serialize)]
struct ModeRow {
    set: &'static str,
    index: usize,
    energy_hz: f64,
    above_mu_hz: f64,
    residual_hz: f64,
}

fn mode_rows(set: &'static str, modes: &EigenSet, mu: f64) -> Vec<ModeRow> {
    modes
        .energies
        .iter()
        .zip(&modes.residuals)
        .enumerate()
        .map(|(index, (e, r))| ModeRow {
            set,
            index,
            energy_hz: joule_to_hz(*e),
            above_mu_hz: (e - mu) / PLANCK,
            residual_hz: joule_to_hz(*r),
        })
        .collect()
}

fn thermal_details(occ: &ThermalOccupations) -> serde_json::Value {
    serde_json::json!({
        "temperature_nk": occ.temperature * 1e9,
        "chemical_potential_hz": joule_to_hz(occ.chemical_potential),
        "occupations": occ.occupations,
        "total_excited": occ.total_excited,
    })
}

/// Runs the configured model and writes its files into `out_dir`.
pub fn run(cfg: &RunConfig, out_dir: &Path, format: OutputFormat) -> Result<RunSummary> {
    let start = Instant::now();
    std::fs::create_dir_all(out_dir)?;
    let mut files = Vec::new();
    let resolved_path = out_dir.join("resolved.conf");
    std::fs::write(&resolved_path, cfg.echo())?;
    log::info!("resolved configuration:\n{}", cfg.echo());
    files.push(resolved_path);

    let ext = match format {
        OutputFormat::Csv => "csv",
        OutputFormat::Json => "json",
    };
    let spectrum_path = out_dir.join(format!("spectrum.{ext}"));
    let mut mu_hz = None;

    let spectrum: Option<(Spectrum, Option<serde_json::Value>)> = match cfg.model {
        Model::Ground => {
            let gs = ground_state(cfg)?;
            mu_hz = Some(joule_to_hz(gs.mu));
            let path = out_dir.join("ground.becw");
            checkpoint::write_checkpoint(&path, &gs.psi1)?;
            files.push(path);
            let info = out_dir.join("ground.json");
            let doc = serde_json::json!({
                "config": config_map(Some(cfg)),
                "mu_hz": joule_to_hz(gs.mu),
                "energies_hz_per_atom": {
                    "kinetic": joule_to_hz(gs.energies.kinetic / gs.n_atoms),
                    "potential": joule_to_hz(gs.energies.potential / gs.n_atoms),
                    "interaction": joule_to_hz(gs.energies.interaction / gs.n_atoms),
                },
                "report": gs.report,
            });
            std::fs::write(&info, serde_json::to_string_pretty(&doc)? + "\n")?;
            files.push(info);
            None
        }
        Model::Modes => {
            let gs = ground_state(cfg)?;
            mu_hz = Some(joule_to_hz(gs.mu));
            let hf1 = hartree_fock_modes(cfg, &gs, Species::One)?;
            let mf2 = hartree_fock_modes(cfg, &gs, Species::Two)?;
            let mut rows = mode_rows("hartree_fock_1", &hf1, gs.mu);
            rows.extend(mode_rows("mean_field_2", &mf2, gs.mu));
            let path = out_dir.join(format!("modes.{ext}"));
            match format {
                OutputFormat::Csv => {
                    let mut out = BufWriter::new(File::create(&path)?);
                    writeln!(out, "set,index,energy_hz,above_mu_hz,residual_hz")?;
                    for r in &rows {
                        writeln!(
                            out,
                            "{},{},{:.16e},{:.16e},{:.16e}",
                            r.set, r.index, r.energy_hz, r.above_mu_hz, r.residual_hz
                        )?;
                    }
                    out.flush()?;
                }
                OutputFormat::Json => {
                    let doc = serde_json::json!({ "config": config_map(Some(cfg)), "mu_hz": joule_to_hz(gs.mu), "modes": rows });
                    std::fs::write(&path, serde_json::to_string_pretty(&doc)? + "\n")?;
                }
            }
            files.push(path);
            None
        }
        Model::SpectrumZeroT => {
            let gs = ground_state(cfg)?;
            mu_hz = Some(joule_to_hz(gs.mu));
            let mf2 = hartree_fock_modes(cfg, &gs, Species::Two)?;
            let lines = zero_temperature_lines(&gs, &mf2)?;
            Some((convolve_lineshape(&lines, &cfg.pulse, &sample_grid(cfg)), None))
        }
        Model::SpectrumThermal => {
            let gs = ground_state(cfg)?;
            mu_hz = Some(joule_to_hz(gs.mu));
            let hf1 = hartree_fock_modes(cfg, &gs, Species::One)?;
            let mf2 = hartree_fock_modes(cfg, &gs, Species::Two)?;
            let occ = bose_occupations(&hf1, gs.mu, cfg.temperature)?;
            let mut lines = zero_temperature_lines(&gs, &mf2)?;
            lines.extend(thermal_lines(&hf1, &mf2, &occ)?);
            Some((
                convolve_lineshape(&lines, &cfg.pulse, &sample_grid(cfg)),
                Some(thermal_details(&occ)),
            ))
        }
        Model::SpectrumHighT => {
            let (lines, occ) = high_temperature_lines(&cfg.trap, cfg.n_atoms, cfg.temperature, cfg.modes_k)?;
            Some((
                convolve_lineshape(&lines, &cfg.pulse, &sample_grid(cfg)),
                Some(thermal_details(&occ)),
            ))
        }
        Model::Sweep => {
            let gs = ground_state(cfg)?;
            mu_hz = Some(joule_to_hz(gs.mu));
            let sweep = sweep_detuning(&gs, &cfg.pulse, &cfg.sweep.values(), cfg.dt_real, cfg.worker_count())?;
            let details = serde_json::json!({ "points": sweep.points });
            Some((sweep.spectrum, Some(details)))
        }
    };

    let mut peaks_hz = Vec::new();
    if let Some((spec, details)) = spectrum {
        peaks_hz = resolved_peaks(&spec.curve, &cfg.pulse, 1e-3)
            .iter()
            .map(|p| p.detuning_hz)
            .collect();
        write_spectrum(&spec, &spectrum_path, format, Some(cfg), details)?;
        files.push(spectrum_path);
    }
    Ok(RunSummary {
        model: cfg.model,
        mu_hz,
        peaks_hz,
        runtime_s: start.elapsed().as_secs_f64(),
        files,
    })
}
