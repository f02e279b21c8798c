//! Single-particle excitation modes of the condensate-dressed potentials of
//! both internal states, and of the bare anharmonic trap used above the
//! critical temperature.
//!
//! The Hamiltonian −(ħ²/2m)∇² + V is real and symmetric on the grid, so the
//! modes are computed as real vectors with the block eigensolver; two real
//! vectors share one complex FFT per operator application.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constants::HBAR;
use crate::eigensolver::{self, BlockOptions, SymmetricOperator};
use crate::error::{Error, Result};
use crate::field::{ComplexField, RealField};
use crate::grid::Grid;
use crate::groundstate::GroundState;
use crate::spectral::KineticOperator;
use crate::trap::{trap_potential, InteractionSpec, Species, TrapSpec};

/// Largest number of modes a single solve may request.
pub const MAX_MODES: usize = 64;

/// Residual bound per mode, in units of ħω̄.
pub const RESIDUAL_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialModel {
    /// Trap plus condensate mean field (needs a ground state).
    HartreeFock,
    /// Bare trap with the quartic term along x; no condensate.
    Anharmonic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// V₁ + 2g₁₁|Ψ₁|²
    HartreeFock1,
    /// V₂ + g₁₂|Ψ₁|²
    MeanField2,
    /// V₁ + ½mγ²x⁴
    Anharmonic1,
    /// V₂ + ½mγ²(x − δx)⁴
    Anharmonic2,
}

#[derive(Debug, Clone)]
pub struct EffectivePotential {
    pub species: Species,
    pub values: RealField,
    pub provenance: Provenance,
    /// Scale used to make the eigenproblem dimensionless (ħω̄ of the trap).
    pub energy_unit: f64,
    /// Where the bare trap of this species has its minimum.
    pub center: [f64; 3],
}

/// Lowest eigenpairs of one effective Hamiltonian.
#[derive(Debug, Clone)]
pub struct EigenSet {
    /// Ascending, J.
    pub energies: Vec<f64>,
    /// Each normalized to 1.
    pub modes: Vec<ComplexField>,
    pub k: usize,
    /// ‖Hψ − Eψ‖ per mode, J.
    pub residuals: Vec<f64>,
    pub iterations: usize,
}

impl EigenSet {
    pub fn grid(&self) -> &Grid {
        &self.modes[0].grid
    }
}

/// Potential part of the single-particle Hamiltonian for one species.
pub fn effective_potential(
    species: Species,
    ground: Option<&GroundState>,
    grid: &Grid,
    trap: &TrapSpec,
    inter: &InteractionSpec,
    model: PotentialModel,
) -> Result<EffectivePotential> {
    trap.validate()?;
    let center = match species {
        Species::One => [0.0; 3],
        Species::Two => [trap.delta_x, 0.0, 0.0],
    };
    let energy_unit = HBAR * trap.omega_bar();
    match model {
        PotentialModel::Anharmonic => Ok(EffectivePotential {
            species,
            values: trap_potential(trap, grid, species, true),
            provenance: match species {
                Species::One => Provenance::Anharmonic1,
                Species::Two => Provenance::Anharmonic2,
            },
            energy_unit,
            center,
        }),
        PotentialModel::HartreeFock => {
            let ground = ground.ok_or(Error::MissingGroundState)?;
            if ground.grid() != grid {
                return Err(Error::GridMismatch);
            }
            let couplings = inter.couplings_on(grid, trap);
            let (factor, provenance) = match species {
                Species::One => (2.0 * couplings.g11, Provenance::HartreeFock1),
                Species::Two => (couplings.g12, Provenance::MeanField2),
            };
            let mut values = trap_potential(trap, grid, species, false);
            for (v, psi) in values.values.iter_mut().zip(&ground.psi1.values) {
                *v += factor * psi.norm_sqr();
            }
            Ok(EffectivePotential {
                species,
                values,
                provenance,
                energy_unit,
                center,
            })
        }
    }
}

/// −(ħ²/2m)∇² + V on a grid, in units of `energy_unit`, acting on real
/// vectors.
pub struct GridHamiltonian {
    kinetic: KineticOperator,
    /// Kinetic mode energies in Fourier layout, scaled.
    kinetic_scaled: Vec<f64>,
    potential: Vec<f64>,
    potential_min: f64,
    energy_unit: f64,
    buffer: Vec<Complex64>,
    image: Vec<Complex64>,
    factors: Vec<f64>,
}

impl GridHamiltonian {
    pub fn new(pot: &EffectivePotential) -> Self {
        let grid = &pot.values.grid;
        let kinetic = KineticOperator::new(grid);
        let kinetic_scaled = kinetic.mode_energies().iter().map(|e| e / pot.energy_unit).collect();
        let potential: Vec<f64> = pot.values.values.iter().map(|v| v / pot.energy_unit).collect();
        let potential_min = potential.iter().cloned().fold(f64::INFINITY, f64::min);
        let n = grid.len();
        GridHamiltonian {
            kinetic,
            kinetic_scaled,
            potential,
            potential_min,
            energy_unit: pot.energy_unit,
            buffer: vec![Complex64::default(); n],
            image: vec![Complex64::default(); n],
            factors: vec![0.0; n],
        }
    }

    /// Applies H to up to two real vectors packed as re + i·im.
    fn apply_pair(&mut self, a: &[f64], b: Option<&[f64]>, ya: &mut [f64], yb: Option<&mut [f64]>) {
        for (i, c) in self.buffer.iter_mut().enumerate() {
            *c = Complex64::new(a[i], b.map_or(0.0, |b| b[i]));
        }
        self.kinetic.apply(&self.buffer, &mut self.image);
        let scale = 1.0 / self.energy_unit;
        for i in 0..a.len() {
            ya[i] = self.image[i].re * scale + self.potential[i] * a[i];
        }
        if let (Some(b), Some(yb)) = (b, yb) {
            for i in 0..b.len() {
                yb[i] = self.image[i].im * scale + self.potential[i] * b[i];
            }
        }
    }

    fn shift(&self, theta: f64) -> f64 {
        (theta - self.potential_min).max(0.5)
    }
}

impl SymmetricOperator for GridHamiltonian {
    fn dim(&self) -> usize {
        self.potential.len()
    }

    fn apply(&mut self, x: &[f64], y: &mut [f64]) {
        self.apply_pair(x, None, y, None);
    }

    /// (T + s)⁻¹ with s ≈ θ − min V, diagonal in Fourier space.
    fn precondition(&mut self, residual: &[f64], out: &mut [f64], theta: f64) {
        let s = self.shift(theta);
        for (f, t) in self.factors.iter_mut().zip(&self.kinetic_scaled) {
            *f = 1.0 / (t + s);
        }
        for (c, r) in self.buffer.iter_mut().zip(residual) {
            *c = Complex64::new(*r, 0.0);
        }
        self.kinetic.apply_real_diagonal(&mut self.buffer, &self.factors);
        for (o, c) in out.iter_mut().zip(&self.buffer) {
            *o = c.re;
        }
    }

    fn apply_block(&mut self, xs: &[Vec<f64>], ys: &mut [Vec<f64>]) {
        let mut i = 0;
        while i < xs.len() {
            if i + 1 < xs.len() {
                let (lo, hi) = ys.split_at_mut(i + 1);
                self.apply_pair(&xs[i], Some(&xs[i + 1]), &mut lo[i], Some(&mut hi[0]));
                i += 2;
            } else {
                self.apply_pair(&xs[i], None, &mut ys[i], None);
                i += 1;
            }
        }
    }
}

/// Oscillator eigenfunctions φ_a(x)φ_b(y)φ_c(z) about `center`, ordered by
/// the harmonic energy a·ωx + b·ωy + c·ωz. Only axes that the
/// grid resolves get powers.
fn seed_block(grid: &Grid, trap: &TrapSpec, center: [f64; 3], count: usize) -> Vec<Vec<f64>> {
    let omegas = trap.omegas();
    let lengths = trap.oscillator_lengths();
    let active: Vec<bool> = grid.dims.iter().map(|&n| n > 1).collect();
    let max_power = count;
    let mut powers = Vec::new();
    for a in 0..=max_power {
        for b in 0..=max_power {
            for c in 0..=max_power {
                let p = [a, b, c];
                if (0..3).any(|ax| !active[ax] && p[ax] > 0) {
                    continue;
                }
                powers.push(p);
            }
        }
    }
    powers.sort_by(|p, q| {
        let e = |p: &[usize; 3]| (0..3).map(|ax| p[ax] as f64 * omegas[ax]).sum::<f64>();
        e(p).total_cmp(&e(q)).then(p.cmp(q))
    });
    powers.truncate(count);
    // Oscillator eigenfunctions per axis from the stable three-term
    // recurrence; raw monomials become numerically dependent at high order.
    let tables: Vec<Vec<Vec<f64>>> = (0..3)
        .map(|ax| {
            let top = powers.iter().map(|p| p[ax]).max().unwrap_or(0);
            let mut table = vec![Vec::with_capacity(grid.dims[ax]); top + 1];
            for i in 0..grid.dims[ax] {
                let u = if active[ax] {
                    (grid.coordinate(ax, i) - center[ax]) / lengths[ax]
                } else {
                    0.0
                };
                let mut prev = 0.0;
                let mut cur = (-0.5 * u * u).exp();
                table[0].push(cur);
                for n in 1..=top {
                    let next = (2.0 / n as f64).sqrt() * u * cur - ((n - 1) as f64 / n as f64).sqrt() * prev;
                    prev = cur;
                    cur = next;
                    table[n].push(cur);
                }
            }
            table
        })
        .collect();
    let [_, ny, nz] = grid.dims;
    powers
        .iter()
        .map(|p| {
            let mut out = Vec::with_capacity(grid.len());
            for iz in 0..nz {
                for iy in 0..ny {
                    let yz = tables[1][p[1]][iy] * tables[2][p[2]][iz];
                    out.extend(tables[0][p[0]].iter().map(|x| x * yz));
                }
            }
            out
        })
        .collect()
}

/// Lowest `k` eigenpairs of −(ħ²/2m)∇² + pot on the potential's grid.
pub fn lowest_eigenpairs(pot: &EffectivePotential, trap: &TrapSpec, k: usize) -> Result<EigenSet> {
    lowest_eigenpairs_with(pot, trap, k, 5000)
}

pub fn lowest_eigenpairs_with(pot: &EffectivePotential, trap: &TrapSpec, k: usize, max_iter: usize) -> Result<EigenSet> {
    if k == 0 {
        return Err(Error::param("modes.k", "must be >= 1"));
    }
    if k > MAX_MODES {
        return Err(Error::TooManyModes {
            requested: k,
            cap: MAX_MODES,
        });
    }
    let grid = pot.values.grid.clone();
    let block = (k + (k / 2).max(4)).min(grid.len());
    if k > grid.len() / 4 {
        return Err(Error::param("modes.k", "must be much smaller than the number of grid points"));
    }
    let seeds = seed_block(&grid, trap, pot.center, block);
    let mut op = GridHamiltonian::new(pot);
    let pairs = eigensolver::lowest_eigenpairs(
        &mut op,
        k,
        seeds,
        &BlockOptions {
            tol: RESIDUAL_TOL,
            max_iter,
        },
    )?;
    let amplitude = 1.0 / grid.volume_element().sqrt();
    let modes = pairs
        .vectors
        .iter()
        .map(|v| {
            // Fix the sign so the largest-magnitude sample is positive.
            let peak = v.iter().cloned().fold(0.0, |m: f64, x| if x.abs() > m.abs() { x } else { m });
            let sign = if peak < 0.0 { -amplitude } else { amplitude };
            let values = v.iter().map(|x| Complex64::new(x * sign, 0.0)).collect();
            ComplexField::new(grid.clone(), values, 1.0)
        })
        .collect();
    log::debug!("{} modes converged in {} iterations", k, pairs.iterations);
    Ok(EigenSet {
        energies: pairs.values.iter().map(|e| e * pot.energy_unit).collect(),
        modes,
        k,
        residuals: pairs.residuals.iter().map(|r| r * pot.energy_unit).collect(),
        iterations: pairs.iterations,
    })
}

/// Line grid along x that holds the first `k` levels of the bare trap of
/// either species with room to spare.
pub fn anharmonic_line_grid(trap: &TrapSpec, k: usize) -> Result<Grid> {
    let x_ho = trap.oscillator_lengths()[0];
    let length = 2.0 * (((2 * k + 1) as f64).sqrt() + 6.0) * x_ho + 2.0 * trap.delta_x;
    let target = (length / (0.1 * x_ho)).ceil() as usize;
    let n = target.next_power_of_two().max(128);
    Grid::line(n, length)
}

/// Modes of both species in the 1D anharmonic trap along x.
pub fn anharmonic_modes_1d(trap: &TrapSpec, k: usize) -> Result<(EigenSet, EigenSet)> {
    if k < 2 {
        return Err(Error::param("modes.k", "must be >= 2"));
    }
    trap.validate()?;
    let grid = anharmonic_line_grid(trap, k)?;
    // Energies in units of ħωx: the transverse frequencies play no role here.
    let unit = HBAR * trap.omegas()[0];
    let inter = InteractionSpec::non_interacting();
    let mut sets = Vec::with_capacity(2);
    for species in [Species::One, Species::Two] {
        let mut pot = effective_potential(species, None, &grid, trap, &inter, PotentialModel::Anharmonic)?;
        pot.energy_unit = unit;
        sets.push(lowest_eigenpairs(&pot, trap, k)?);
    }
    let set2 = sets.pop().expect("two sets");
    let set1 = sets.pop().expect("two sets");
    Ok((set1, set2))
}
