use thiserror::Error;

use crate::cli::checkpoint::CheckpointError;
use crate::cli::config::ConfigError;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error(
        "healing length {healing_length:.3e} m resolved by only {points:.2} points along the coarsest axis (need 2)"
    )]
    UnresolvedHealingLength { healing_length: f64, points: f64 },

    #[error(
        "ground-state iteration did not converge after {iterations} steps (last relative energy change {last_change:.3e})"
    )]
    GroundStateNotConverged {
        iterations: usize,
        last_change: f64,
        history: Vec<f64>,
    },

    #[error("non-finite value in {stage} at step {step}")]
    NonFinite { stage: &'static str, step: usize },

    #[error("eigensolver did not converge after {iterations} iterations (worst residual {worst:.3e} J)")]
    EigenNotConverged {
        iterations: usize,
        worst: f64,
        residuals: Vec<f64>,
    },

    #[error("requested {requested} eigenpairs, cap is {cap}")]
    TooManyModes { requested: usize, cap: usize },

    #[error("the Hartree-Fock potential needs a ground state")]
    MissingGroundState,

    #[error("mode {index} has energy {energy:.6e} J, not above the thermal chemical potential {mu:.6e} J")]
    ChemicalPotentialTooHigh { index: usize, energy: f64, mu: f64 },

    #[error("fugacity solve did not converge: {0}")]
    FugacityNotConverged(String),

    #[error("cannot normalize a spectrum whose peak is zero")]
    ZeroSpectrum,

    #[error("matched normalization requires a reference spectrum")]
    MissingReference,

    #[error("every detuning point of the sweep failed: {0}")]
    SweepFailed(String),

    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// Process exit status for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(ConfigError::Unreadable { .. }) => 4,
            Error::Config(_)
            | Error::InvalidParameter { .. }
            | Error::InvalidGrid(_)
            | Error::UnresolvedHealingLength { .. }
            | Error::TooManyModes { .. }
            | Error::MissingGroundState
            | Error::MissingReference => 2,
            Error::GroundStateNotConverged { .. }
            | Error::NonFinite { .. }
            | Error::EigenNotConverged { .. }
            | Error::FugacityNotConverged(_)
            | Error::ChemicalPotentialTooHigh { .. }
            | Error::SweepFailed(_) => 3,
            Error::Io(_) | Error::Checkpoint(_) | Error::Json(_) => 4,
            Error::GridMismatch | Error::ZeroSpectrum => 1,
        }
    }
}
