//! Stationary Gross-Pitaevskii ground state of the |1⟩ condensate by
//! imaginary-time split-step propagation, plus the closed-form
//! Thomas-Fermi, carrier-shift and critical-temperature results built on it.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constants::{HBAR, K_BOLTZMANN, PLANCK, ZETA_3, BOHR_RADIUS};
use crate::error::{Error, Result};
use crate::field::{energy_functionals_with, ComplexField, Energies, RealField};
use crate::grid::Grid;
use crate::spectral::KineticOperator;
use crate::trap::{trap_potential, Couplings, InteractionSpec, Species, TrapSpec};

#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// Imaginary time step in s. `None` picks 0.1/[`imaginary_rate`].
    pub dt_imag: Option<f64>,
    /// Relative energy change per step that counts as converged.
    pub tol: f64,
    pub max_iter: usize,
    /// After converging, repeat the iteration this many times with the time
    /// step halved each time.
    pub refinements: usize,
    /// Preconditioned-gradient polishing of the split-step result down to
    /// this relative residual ‖(H − μ)ψ‖/(|μ|‖ψ‖). The split-step fixed point
    /// carries an O(dt²) bias that this removes. `None` skips polishing.
    pub polish_tol: Option<f64>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            dt_imag: None,
            tol: 1e-10,
            max_iter: 200_000,
            refinements: 0,
            polish_tol: Some(1e-10),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub iterations: usize,
    /// Relative energy change of the last step.
    pub final_change: f64,
    /// ‖(H − μ)ψ‖ / (|μ|·‖ψ‖).
    pub residual: f64,
    /// Steps where the energy rose by more than 1e−12 relative.
    pub descent_violations: usize,
    /// Time step of the last stage, s.
    pub dt_imag: f64,
}

#[derive(Debug, Clone)]
pub struct GroundState {
    /// Condensate wavefunction normalized to `n_atoms`.
    pub psi1: ComplexField,
    /// Chemical potential, J.
    pub mu: f64,
    pub energies: Energies,
    pub n_atoms: f64,
    pub trap: TrapSpec,
    pub interactions: InteractionSpec,
    /// Couplings actually used on this grid (rescaled on a line grid).
    pub couplings: Couplings,
    pub report: ConvergenceReport,
}

impl GroundState {
    pub fn grid(&self) -> &Grid {
        &self.psi1.grid
    }
}

/// Fastest rate the imaginary-time step has to resolve: the largest trap
/// frequency, or μ/ħ in the Thomas-Fermi estimate when that is larger. A
/// step much longer than ħ/μ makes the nonlinear factor overshoot and the
/// iteration settles into a period-two oscillation.
pub fn imaginary_rate(trap: &TrapSpec, inter: &InteractionSpec, n_atoms: f64) -> f64 {
    trap.omega_max().max(thomas_fermi_mu(trap, inter, n_atoms) / HBAR)
}

/// Gaussian with the oscillator width along each axis, normalized to `n_atoms`.
pub fn gaussian_seed(grid: &Grid, trap: &TrapSpec, n_atoms: f64) -> ComplexField {
    let l = trap.oscillator_lengths();
    let values: Vec<f64> = grid
        .points()
        .map(|r| (-(0..3).map(|a| r[a] * r[a] / (2.0 * l[a] * l[a])).sum::<f64>()).exp())
        .collect();
    let mut psi = ComplexField::from_real(grid, &values, n_atoms);
    psi.renormalize();
    psi
}

pub fn solve_groundstate(
    grid: &Grid,
    trap: &TrapSpec,
    inter: &InteractionSpec,
    n_atoms: f64,
    opts: &SolverOptions,
) -> Result<GroundState> {
    trap.validate()?;
    inter.validate()?;
    if !(n_atoms >= 1.0) {
        return Err(Error::param("atoms.n", "must be >= 1"));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::param("solver.tol", "must be > 0"));
    }
    let dt0 = opts.dt_imag.unwrap_or(0.1 / imaginary_rate(trap, inter, n_atoms));
    if !(dt0 > 0.0) {
        return Err(Error::param("solver.dt_imag", "must be > 0"));
    }

    let couplings = inter.couplings_on(grid, trap);
    let g = couplings.g11;
    let potential = trap_potential(trap, grid, Species::One, false);
    let mut kinetic = KineticOperator::new(grid);
    let mut psi = gaussian_seed(grid, trap, n_atoms);
    let mut energies = energy_functionals_with(&mut kinetic, &psi, &potential, g)?;

    let mut history = Vec::new();
    let mut descent_violations = 0;
    let mut iterations = 0;
    let mut dt = dt0;
    let mut last_change = f64::INFINITY;

    for stage in 0..=opts.refinements {
        if stage > 0 {
            dt *= 0.5;
        }
        let half_kinetic: Vec<f64> = kinetic
            .mode_energies()
            .iter()
            .map(|e| (-e * dt / (2.0 * HBAR)).exp())
            .collect();
        loop {
            if iterations >= opts.max_iter {
                return Err(Error::GroundStateNotConverged {
                    iterations,
                    last_change,
                    history,
                });
            }
            iterations += 1;
            kinetic.apply_real_diagonal(&mut psi.values, &half_kinetic);
            for (v, pot) in psi.values.iter_mut().zip(&potential.values) {
                *v *= (-(pot + g * v.norm_sqr()) * dt / HBAR).exp();
            }
            kinetic.apply_real_diagonal(&mut psi.values, &half_kinetic);
            psi.renormalize();
            if !psi.is_finite() {
                return Err(Error::NonFinite {
                    stage: "imaginary-time step",
                    step: iterations,
                });
            }
            let next = energy_functionals_with(&mut kinetic, &psi, &potential, g)?;
            let (old, new) = (energies.total(), next.total());
            if !new.is_finite() {
                return Err(Error::NonFinite {
                    stage: "energy evaluation",
                    step: iterations,
                });
            }
            // Halving dt moves the fixed point, so only compare within a stage.
            if new > old + 1e-12 * old.abs() && history.len() > 0 {
                descent_violations += 1;
            }
            last_change = ((new - old) / new).abs();
            history.push(last_change);
            energies = next;
            if last_change < opts.tol {
                break;
            }
        }
        // The first step of a refined stage is allowed to raise the energy.
        history.clear();
    }

    if let Some(polish_tol) = opts.polish_tol {
        let polished = polish(&mut kinetic, &mut psi, &potential, g, polish_tol, opts.max_iter)?;
        iterations += polished.iterations;
        energies = polished.energies;
    }

    let mu = (energies.kinetic + energies.potential + 2.0 * energies.interaction) / n_atoms;
    let residual = stationary_residual(&mut kinetic, &psi, &potential, g, mu);
    log::debug!(
        "ground state: {iterations} steps, mu/h = {:.3} Hz, residual {residual:.2e}",
        mu / PLANCK
    );
    Ok(GroundState {
        psi1: psi,
        mu,
        energies,
        n_atoms,
        trap: *trap,
        interactions: *inter,
        couplings,
        report: ConvergenceReport {
            iterations,
            final_change: last_change,
            residual,
            descent_violations,
            dt_imag: dt,
        },
    })
}

/// Residual below which polishing accepts steps on the residual rather than
/// the energy.
const RESIDUAL_SWITCH: f64 = 1e-5;

struct Polished {
    iterations: usize,
    energies: Energies,
}

/// Preconditioned steepest descent on the energy at fixed norm:
/// ψ ← ψ − τ·P(H − μ)ψ projected onto the tangent space, with
/// P = (T + s)⁻¹ diagonal in Fourier space. A step that raises the energy
/// (or, near convergence, the residual) is undone and τ halved.
fn polish(
    kinetic: &mut KineticOperator,
    psi: &mut ComplexField,
    potential: &RealField,
    g: f64,
    tol: f64,
    max_iter: usize,
) -> Result<Polished> {
    let n_atoms = psi.norm_target;
    let dv = psi.grid.volume_element();
    let len = psi.values.len();
    let mut t_psi = vec![Complex64::default(); len];
    let mut direction = vec![Complex64::default(); len];
    let mut step: f64 = 1.0;
    let mut previous: Option<(Vec<Complex64>, f64, f64)> = None;
    let mut best_residual = f64::INFINITY;
    let mut best_at = 0;

    for iteration in 1..=max_iter {
        kinetic.apply(&psi.values, &mut t_psi);
        let mut e_kin = 0.0;
        let mut e_pot = 0.0;
        let mut e_int = 0.0;
        for ((v, tv), pot) in psi.values.iter().zip(&t_psi).zip(&potential.values) {
            let n = v.norm_sqr();
            e_kin += (v.conj() * tv).re;
            e_pot += pot * n;
            e_int += n * n;
        }
        let energies = Energies {
            kinetic: e_kin * dv,
            potential: e_pot * dv,
            interaction: 0.5 * g * e_int * dv,
        };
        let energy = energies.total();
        if !energy.is_finite() {
            return Err(Error::NonFinite {
                stage: "ground-state polishing",
                step: iteration,
            });
        }
        let mu = (energies.kinetic + energies.potential + 2.0 * energies.interaction) / n_atoms;
        let mut res_sq = 0.0;
        for (((d, v), tv), pot) in direction.iter_mut().zip(&psi.values).zip(&t_psi).zip(&potential.values) {
            *d = tv + v * (pot + g * v.norm_sqr() - mu);
            res_sq += d.norm_sqr();
        }
        let residual = (res_sq * dv / n_atoms).sqrt() / mu.abs();

        // Far from the minimum a step must lower the energy. Close to it the
        // energy change drops below double precision (it is quadratic in the
        // error), so there the residual has to shrink instead.
        if let Some((saved, saved_energy, saved_residual)) = previous.take() {
            let rejected = if saved_residual > RESIDUAL_SWITCH {
                energy > saved_energy + 1e-13 * saved_energy.abs()
            } else {
                residual > saved_residual
            };
            if rejected {
                psi.values = saved;
                step *= 0.5;
                if step < 1e-6 {
                    // No descent direction left at this precision.
                    return Ok(Polished {
                        iterations: iteration,
                        energies: energy_functionals_with(kinetic, psi, potential, g)?,
                    });
                }
                continue;
            }
            step = (step * 1.2).min(1.5);
        }

        if residual < best_residual {
            best_residual = residual;
            best_at = iteration;
        }
        if residual < tol || (residual < 100.0 * tol && iteration - best_at > 200) {
            return Ok(Polished {
                iterations: iteration,
                energies,
            });
        }

        let shift = mu.abs().max(potential.min().abs());
        let precond: Vec<f64> = kinetic.mode_energies().iter().map(|e| 1.0 / (e + shift)).collect();
        kinetic.apply_real_diagonal(&mut direction, &precond);
        let overlap: Complex64 =
            psi.values.iter().zip(&direction).map(|(v, d)| v.conj() * d).sum::<Complex64>() * dv / n_atoms;
        previous = Some((psi.values.clone(), energy, residual));
        for (v, d) in psi.values.iter_mut().zip(&direction) {
            *v -= (d - v.clone() * overlap) * step;
        }
        psi.renormalize();
    }
    Err(Error::GroundStateNotConverged {
        iterations: max_iter,
        last_change: f64::NAN,
        history: Vec::new(),
    })
}

fn stationary_residual(
    kinetic: &mut KineticOperator,
    psi: &ComplexField,
    potential: &RealField,
    g: f64,
    mu: f64,
) -> f64 {
    let mut h_psi = vec![Complex64::default(); psi.values.len()];
    kinetic.apply(&psi.values, &mut h_psi);
    let mut num = 0.0;
    let mut den = 0.0;
    for ((hv, v), pot) in h_psi.iter_mut().zip(&psi.values).zip(&potential.values) {
        *hv += v * (pot + g * v.norm_sqr() - mu);
        num += hv.norm_sqr();
        den += v.norm_sqr();
    }
    (num / den).sqrt() / mu.abs()
}

/// Thomas-Fermi chemical potential (ħω̄/2)(15 N a11/a_ho)^(2/5), J.
/// Zero for N = 0 or a11 ≤ 0.
pub fn thomas_fermi_mu(trap: &TrapSpec, inter: &InteractionSpec, n_atoms: f64) -> f64 {
    if n_atoms <= 0.0 || inter.a11 <= 0.0 {
        return 0.0;
    }
    let a_ho = trap.mean_oscillator_length();
    let a11 = inter.a11 * BOHR_RADIUS;
    0.5 * HBAR * trap.omega_bar() * (15.0 * n_atoms * a11 / a_ho).powf(0.4)
}

/// Mean-field shift of the carrier line, μ(a12/a11 − 1)/h in Hz.
pub fn carrier_shift(mu: f64, inter: &InteractionSpec) -> Result<f64> {
    if !(inter.a11 > 0.0) {
        return Err(Error::param("scattering.a11", "must be > 0 for the carrier shift"));
    }
    Ok(mu * (inter.a12 / inter.a11 - 1.0) / PLANCK)
}

/// BEC critical temperature in K. The ideal-gas value is
/// k_B·T⁰ = ħω̄(N/ζ(3))^(1/3); `corrections` applies the finite-size and
/// interaction shifts −0.73(ω_m/ω̄)N^(−1/3) − 1.33(a11/a_ho)N^(1/6).
pub fn critical_temperature(
    trap: &TrapSpec,
    inter: &InteractionSpec,
    n_atoms: f64,
    corrections: bool,
) -> Result<f64> {
    if !(n_atoms >= 2.0) {
        return Err(Error::param("atoms.n", "critical temperature needs N >= 2"));
    }
    let omega_bar = trap.omega_bar();
    let ideal = HBAR * omega_bar * (n_atoms / ZETA_3).cbrt() / K_BOLTZMANN;
    if !corrections {
        return Ok(ideal);
    }
    let finite_size = -0.73 * (trap.omega_mean() / omega_bar) * n_atoms.powf(-1.0 / 3.0);
    let interaction =
        -1.33 * (inter.a11 * BOHR_RADIUS / trap.mean_oscillator_length()) * n_atoms.powf(1.0 / 6.0);
    Ok(ideal * (1.0 + finite_size + interaction))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{hz_to_joule, NANOKELVIN};
    use crate::grid::{build_grid, HealingCheck};

    #[test]
    fn thomas_fermi_scaling() {
        let trap = TrapSpec::chip_trap();
        let inter = InteractionSpec::default();
        assert_eq!(thomas_fermi_mu(&trap, &inter, 0.0), 0.0);
        let a = thomas_fermi_mu(&trap, &inter, 1000.0);
        let b = thomas_fermi_mu(&trap, &inter, 32_000.0);
        assert!((b / a - 4.0).abs() < 1e-12);
        let mu400 = thomas_fermi_mu(&trap, &inter, 400.0) / PLANCK;
        assert!((mu400 - 750.0).abs() < 25.0, "{mu400}");
    }

    #[test]
    fn carrier_shift_values() {
        let inter = InteractionSpec::default();
        let s = carrier_shift(hz_to_joule(922.0), &inter).unwrap();
        assert!((s + 21.95).abs() < 0.01, "{s}");
        assert_eq!(carrier_shift(0.0, &inter).unwrap(), 0.0);
        let same = InteractionSpec { a12: 100.4, ..inter };
        assert_eq!(carrier_shift(hz_to_joule(900.0), &same).unwrap(), 0.0);
        assert!(carrier_shift(1.0, &InteractionSpec::non_interacting()).is_err());
    }

    #[test]
    fn critical_temperatures() {
        let trap = TrapSpec::chip_trap();
        let inter = InteractionSpec::default();
        let tc = critical_temperature(&trap, &inter, 400.0, true).unwrap() / NANOKELVIN;
        let t0 = critical_temperature(&trap, &inter, 400.0, false).unwrap() / NANOKELVIN;
        assert!((tc - 87.0).abs() < 3.0, "{tc}");
        assert!((t0 - 103.0).abs() < 2.0, "{t0}");
        assert!(critical_temperature(&trap, &inter, 1.0, true).is_err());

        // isotropic, a11 = 0: only the finite-size term remains
        let iso = TrapSpec::harmonic(200.0, 200.0, 200.0);
        let free = InteractionSpec::non_interacting();
        let ideal = critical_temperature(&iso, &free, 1000.0, false).unwrap();
        let corr = critical_temperature(&iso, &free, 1000.0, true).unwrap();
        assert!((corr / ideal - (1.0 - 0.73 / 10.0)).abs() < 1e-12);
    }

    #[test]
    fn ideal_gas_ground_state() {
        let trap = TrapSpec::chip_trap();
        let free = InteractionSpec::non_interacting();
        let grid = build_grid(&trap, &free, 0.0, [32, 32, 32], 12.0, HealingCheck::Warn).unwrap();
        let gs = solve_groundstate(&grid, &trap, &free, 50.0, &SolverOptions::default()).unwrap();
        let expect = trap.zero_point_energy();
        assert!((gs.mu / expect - 1.0).abs() < 1e-8, "{}", gs.mu / expect);
        assert!((gs.mu / PLANCK - 573.0).abs() < 0.5);
        assert!(gs.report.residual < 1e-5);
    }

    #[test]
    fn nan_input_aborts() {
        let trap = TrapSpec::chip_trap();
        let inter = InteractionSpec { a11: f64::NAN, ..InteractionSpec::default() };
        let grid = Grid::new([8, 8, 8], [1e-6, 1e-6, 1e-6]).unwrap();
        assert!(solve_groundstate(&grid, &trap, &inter, 10.0, &SolverOptions::default()).is_err());
    }

    #[test]
    fn rejects_bad_arguments() {
        let trap = TrapSpec::chip_trap();
        let inter = InteractionSpec::default();
        let grid = Grid::new([8, 8, 8], [1e-6, 1e-6, 1e-6]).unwrap();
        assert!(solve_groundstate(&grid, &trap, &inter, 0.5, &SolverOptions::default()).is_err());
        let bad = SolverOptions { tol: 0.0, ..SolverOptions::default() };
        assert!(solve_groundstate(&grid, &trap, &inter, 10.0, &bad).is_err());
        let short = SolverOptions { max_iter: 3, ..SolverOptions::default() };
        match solve_groundstate(&grid, &trap, &inter, 10.0, &short) {
            Err(Error::GroundStateNotConverged { history, .. }) => assert_eq!(history.len(), 3),
            other => panic!("unexpected {other:?}"),
        }
    }
}
