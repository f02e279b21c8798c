//! Ground-state properties of the interacting condensate on 3D and line grids.

use bec_sideband::constants::PLANCK;
use bec_sideband::grid::{build_grid, Grid, HealingCheck};
use bec_sideband::groundstate::{solve_groundstate, thomas_fermi_mu, SolverOptions};
use bec_sideband::trap::{InteractionSpec, TrapSpec};

fn solve(trap: &TrapSpec, inter: &InteractionSpec, n: f64, dims: [usize; 3], extent: f64) -> bec_sideband::groundstate::GroundState {
    let grid = build_grid(trap, inter, n, dims, extent, HealingCheck::Warn).unwrap();
    solve_groundstate(&grid, trap, inter, n, &SolverOptions::default()).unwrap()
}

#[test]
fn interacting_state_is_virial_and_descends() {
    let trap = TrapSpec::chip_trap();
    let inter = InteractionSpec::default();
    let gs = solve(&trap, &inter, 400.0, [64, 32, 32], 6.0);
    let v = gs.energies.virial_residual();
    assert!(v.abs() < 1e-3, "{v}");
    assert_eq!(gs.report.descent_violations, 0);
    assert!(gs.mu > trap.zero_point_energy());
    assert!(gs.report.residual < 1e-8);
}

#[test]
fn chemical_potential_grows_with_atom_number() {
    let trap = TrapSpec::chip_trap();
    let inter = InteractionSpec::default();
    let mut last = trap.zero_point_energy();
    for n in [10.0, 100.0, 400.0] {
        let mu = solve(&trap, &inter, n, [32, 16, 16], 6.0).mu;
        assert!(mu > last, "{n}: {mu} <= {last}");
        last = mu;
    }
}

#[test]
fn large_cloud_approaches_thomas_fermi() {
    let trap = TrapSpec::harmonic(100.0, 100.0, 100.0);
    let inter = InteractionSpec::default();
    let gs = solve(&trap, &inter, 1e5, [32, 32, 32], 6.0);
    let tf = thomas_fermi_mu(&trap, &inter, 1e5);
    assert!((gs.mu / tf - 1.0).abs() < 0.02, "{}", gs.mu / tf);
}

#[test]
fn chemical_potential_is_grid_independent() {
    let trap = TrapSpec::chip_trap();
    let inter = InteractionSpec::default();
    let coarse = solve(&trap, &inter, 400.0, [32, 16, 16], 6.0).mu;
    let fine = solve(&trap, &inter, 400.0, [64, 32, 32], 6.0).mu;
    assert!((fine / coarse - 1.0).abs() < 5e-3, "{coarse} vs {fine}");
}

#[test]
fn line_grid_reduces_to_axial_problem() {
    let trap = TrapSpec::chip_trap();
    let free = InteractionSpec::non_interacting();
    let grid = Grid::line(256, 24e-6).unwrap();
    let gs = solve_groundstate(&grid, &trap, &free, 100.0, &SolverOptions::default()).unwrap();
    assert!((gs.mu / (0.5 * PLANCK * trap.fx) - 1.0).abs() < 1e-8);

    // The Gaussian transverse ansatz is variational: adding the transverse
    // zero-point energy back overestimates the 3D μ, but only moderately.
    let inter = InteractionSpec::default();
    let line = solve_groundstate(&grid, &trap, &inter, 400.0, &SolverOptions::default()).unwrap();
    let full = solve(&trap, &inter, 400.0, [64, 32, 32], 6.0);
    let transverse = 0.5 * PLANCK * (trap.fy + trap.fz);
    let ratio = (line.mu + transverse) / full.mu;
    assert!(ratio > 1.0 && ratio < 1.15, "{ratio}");
}
