use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use bec_sideband::cli::{run, Command, ConfigSource, OutputFormat};
use bec_sideband::Error;

/// Sideband Rabi spectroscopy of trapped, interacting Bose gases.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve the condensate ground state and write a checkpoint.
    Ground(Common),
    /// Hartree-Fock (|1⟩) and mean-field (|2⟩) single-particle modes.
    Modes(Common),
    /// Golden-rule spectrum (model spectrum_zero_t, spectrum_thermal or spectrum_high_t).
    Spectrum(Common),
    /// Two-component dynamics, one Rabi pulse per detuning.
    Sweep(Common),
}

#[derive(Args)]
struct Common {
    /// Config file with `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Named parameter set merged before the config file.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,
}

fn execute(command: Command, args: Common) -> Result<String, Error> {
    let mut source = ConfigSource::new();
    if let Some(preset) = &args.preset {
        source = source.with_preset(preset)?;
    }
    if let Some(path) = &args.config {
        source = source.with_file(path)?;
    }
    let cfg = source.resolve_for(command)?;
    let summary = run(&cfg, &args.out, args.format)?;
    Ok(summary.to_string())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Cmd::Ground(a) => (Command::Ground, a),
        Cmd::Modes(a) => (Command::Modes, a),
        Cmd::Spectrum(a) => (Command::Spectrum, a),
        Cmd::Sweep(a) => (Command::Sweep, a),
    };
    match execute(command, args) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
