//! Simulation of sideband Rabi spectroscopy on harmonically trapped,
//! interacting Bose gases.
//!
//! The pipeline runs bottom-up:
//!
//! - [`groundstate`] solves the stationary Gross-Pitaevskii equation for the
//!   |1⟩ condensate and gives μ, the carrier shift and T_C.
//! - [`eigenmodes`] diagonalizes the Hartree-Fock (|1⟩) and mean-field (|2⟩)
//!   single-particle Hamiltonians, or the quartic 1D model for hot clouds.
//! - [`spectra`] turns Franck-Condon overlaps and Bose-Einstein occupations
//!   into golden-rule line lists and convolves them with the pulse lineshape.
//! - [`dynamics`] integrates the coupled two-component GPE under a
//!   rotating-wave Rabi drive and sweeps the detuning.
//! - [`cli`] parses run configurations and writes spectra and checkpoints.
//!
//! All quantities are SI internally; frequencies at the configuration
//! boundary are in Hz.

pub mod cli;
pub mod constants;
pub mod dynamics;
pub mod eigenmodes;
pub mod eigensolver;
pub mod error;
pub mod field;
pub mod grid;
pub mod groundstate;
pub mod spectra;
pub mod spectral;
pub mod trap;

pub use error::{Error, Result};
pub use field::{inner_product, ComplexField, Energies, RealField};
pub use grid::{build_grid, Grid, HealingCheck};
pub use trap::{trap_potential, InteractionSpec, Species, TrapSpec};
