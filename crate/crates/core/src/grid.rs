//! Uniform Cartesian grids centred on the |1⟩ trap minimum.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::groundstate::thomas_fermi_mu;
use crate::trap::{InteractionSpec, TrapSpec};
use crate::constants::{BOHR_RADIUS, MASS_RB87};

/// A periodic box of `dims[0] × dims[1] × dims[2]` points. Storage order is
/// x-fastest: index = ix + nx·(iy + ny·iz). Coordinate of index i along an
/// axis is (i − n/2)·d.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
}

/// What to do when the grid spacing does not resolve the healing length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HealingCheck {
    #[default]
    Warn,
    Error,
}

impl Grid {
    /// Any power-of-two dims (including 1) with positive spacing.
    pub fn new(dims: [usize; 3], spacing: [f64; 3]) -> Result<Self> {
        for (n, d) in dims.iter().zip(&spacing) {
            if *n == 0 || !n.is_power_of_two() {
                return Err(Error::InvalidGrid(format!("dimension {n} is not a power of two")));
            }
            if !(*d > 0.0 && d.is_finite()) {
                return Err(Error::InvalidGrid(format!("spacing {d} must be positive")));
            }
        }
        Ok(Grid { dims, spacing })
    }

    /// One-dimensional grid along x with `n` points spanning `length`.
    pub fn line(n: usize, length: f64) -> Result<Self> {
        Grid::new([n, 1, 1], [length / n as f64, 1.0, 1.0])
    }

    /// True when only the x axis is resolved.
    pub fn is_line(&self) -> bool {
        self.dims[1] == 1 && self.dims[2] == 1
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Volume element. Axes with a single point contribute a factor 1, so a
    /// line grid integrates with dx alone.
    pub fn volume_element(&self) -> f64 {
        self.dims
            .iter()
            .zip(&self.spacing)
            .map(|(&n, &d)| if n == 1 { 1.0 } else { d })
            .product()
    }

    pub fn extent(&self) -> [f64; 3] {
        [0, 1, 2].map(|a| self.dims[a] as f64 * self.spacing[a])
    }

    #[inline]
    pub fn coordinate(&self, axis: usize, i: usize) -> f64 {
        (i as f64 - (self.dims[axis] / 2) as f64) * self.spacing[axis]
    }

    pub fn axis_coordinates(&self, axis: usize) -> Vec<f64> {
        (0..self.dims[axis]).map(|i| self.coordinate(axis, i)).collect()
    }

    #[inline]
    pub fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        ix + self.dims[0] * (iy + self.dims[1] * iz)
    }

    /// Coordinates of every point in storage order.
    pub fn points(&self) -> impl Iterator<Item = [f64; 3]> + '_ {
        let [nx, ny, nz] = self.dims;
        let xs = self.axis_coordinates(0);
        let ys = self.axis_coordinates(1);
        let zs = self.axis_coordinates(2);
        (0..nz).flat_map(move |iz| {
            let z = zs[iz];
            let xs = xs.clone();
            let ys = ys.clone();
            (0..ny).flat_map(move |iy| {
                let y = ys[iy];
                let xs = xs.clone();
                (0..nx).map(move |ix| [xs[ix], y, z])
            })
        })
    }

    /// FFT wavenumbers along one axis, in FFT output order.
    pub fn wavenumbers(&self, axis: usize) -> Vec<f64> {
        let n = self.dims[axis];
        let dk = 2.0 * std::f64::consts::PI / (n as f64 * self.spacing[axis]);
        (0..n)
            .map(|i| {
                let m = if i < n / 2 { i as f64 } else { i as f64 - n as f64 };
                if n == 1 {
                    0.0
                } else {
                    m * dk
                }
            })
            .collect()
    }
}

/// Sizes a grid for the trap: the box length along each axis is
/// `extent_factor × max(oscillator length, Thomas-Fermi radius)`.
pub fn build_grid(
    trap: &TrapSpec,
    inter: &InteractionSpec,
    n_atoms: f64,
    dims: [usize; 3],
    extent_factor: f64,
    healing: HealingCheck,
) -> Result<Grid> {
    trap.validate()?;
    let line = dims[1] == 1 && dims[2] == 1;
    if dims[0] < 8 || (!line && (dims[1] < 8 || dims[2] < 8)) {
        return Err(Error::InvalidGrid(format!(
            "dims {dims:?}: each axis needs at least 8 points, or ny = nz = 1 for a line"
        )));
    }
    if !(extent_factor > 0.0 && extent_factor.is_finite()) {
        return Err(Error::param("grid.extent_factor", "must be > 0"));
    }
    let mu_tf = thomas_fermi_mu(trap, inter, n_atoms);
    let omegas = trap.omegas();
    let lengths = trap.oscillator_lengths();
    let mut spacing = [1.0; 3];
    for a in 0..if line { 1 } else { 3 } {
        let r_tf = (2.0 * mu_tf / (MASS_RB87 * omegas[a] * omegas[a])).sqrt();
        spacing[a] = extent_factor * lengths[a].max(r_tf) / dims[a] as f64;
    }
    let grid = Grid::new(dims, spacing)?;

    if let Some(xi) = healing_length(trap, inter, n_atoms) {
        let coarsest = spacing.iter().cloned().fold(0.0, f64::max);
        let points = xi / coarsest;
        if points < 2.0 {
            match healing {
                HealingCheck::Warn => log::warn!(
                    "healing length {:.3} um resolved by {:.2} points only",
                    xi * 1e6,
                    points
                ),
                HealingCheck::Error => {
                    return Err(Error::UnresolvedHealingLength {
                        healing_length: xi,
                        points,
                    })
                }
            }
        }
    }
    Ok(grid)
}

/// Healing length ξ = 1/√(8π n₀ a11) at the Thomas-Fermi peak density
/// n₀ = μ_TF/g11. `None` without repulsive interactions.
pub fn healing_length(trap: &TrapSpec, inter: &InteractionSpec, n_atoms: f64) -> Option<f64> {
    let g = inter.couplings().g11;
    if g <= 0.0 || n_atoms <= 0.0 {
        return None;
    }
    let n0 = thomas_fermi_mu(trap, inter, n_atoms) / g;
    Some(1.0 / (8.0 * std::f64::consts::PI * n0 * inter.a11 * BOHR_RADIUS).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{HBAR, MICROMETRE};

    #[test]
    fn ideal_extent_is_oscillator_lengths() {
        let trap = TrapSpec::harmonic(112.0, 517.0, 517.0);
        let g = build_grid(&trap, &InteractionSpec::default(), 0.0, [64, 32, 32], 6.0, HealingCheck::Warn).unwrap();
        let x_ho = (HBAR / (MASS_RB87 * 2.0 * std::f64::consts::PI * 112.0)).sqrt();
        assert!((x_ho / MICROMETRE - 1.02).abs() < 0.01);
        assert!((g.extent()[0] / (6.0 * x_ho) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn isotropic_trap_gives_equal_extents() {
        let trap = TrapSpec::harmonic(200.0, 200.0, 200.0);
        let g = build_grid(&trap, &InteractionSpec::default(), 1000.0, [16, 16, 16], 6.0, HealingCheck::Warn).unwrap();
        let e = g.extent();
        assert_eq!(e[0], e[1]);
        assert_eq!(e[1], e[2]);
    }

    #[test]
    fn thomas_fermi_radius_widens_box() {
        let trap = TrapSpec::chip_trap();
        let inter = InteractionSpec::default();
        let g = build_grid(&trap, &inter, 400.0, [64, 32, 32], 6.0, HealingCheck::Warn).unwrap();
        let x_ho = trap.oscillator_lengths()[0];
        assert!(g.extent()[0] > 6.0 * x_ho);
        let mu = thomas_fermi_mu(&trap, &inter, 400.0);
        let wx = trap.omegas()[0];
        let rx = (2.0 * mu / (MASS_RB87 * wx * wx)).sqrt();
        assert!((g.extent()[0] / (6.0 * rx) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_small_or_odd_dims() {
        let trap = TrapSpec::chip_trap();
        let inter = InteractionSpec::default();
        assert!(build_grid(&trap, &inter, 0.0, [4, 8, 8], 6.0, HealingCheck::Warn).is_err());
        assert!(build_grid(&trap, &inter, 0.0, [24, 8, 8], 6.0, HealingCheck::Warn).is_err());
        assert!(build_grid(&trap, &inter, 0.0, [8, 8, 8], 0.0, HealingCheck::Warn).is_err());
    }

    #[test]
    fn strict_healing_check() {
        let trap = TrapSpec::chip_trap();
        let inter = InteractionSpec::default();
        let r = build_grid(&trap, &inter, 400.0, [8, 8, 8], 6.0, HealingCheck::Error);
        assert!(matches!(r, Err(Error::UnresolvedHealingLength { .. })));
    }

    #[test]
    fn coordinates_centered() {
        let g = Grid::new([8, 4, 1], [1.0, 2.0, 1.0]).unwrap();
        assert_eq!(g.coordinate(0, 4), 0.0);
        assert_eq!(g.coordinate(0, 0), -4.0);
        assert_eq!(g.coordinate(1, 0), -4.0);
        assert_eq!(g.coordinate(2, 0), 0.0);
        let pts: Vec<_> = g.points().collect();
        assert_eq!(pts.len(), 32);
        assert_eq!(pts[g.index(5, 3, 0)], [1.0, 2.0, 0.0]);
    }

    #[test]
    fn wavenumber_layout() {
        let g = Grid::new([4, 1, 1], [1.0, 1.0, 1.0]).unwrap();
        let k = g.wavenumbers(0);
        let dk = std::f64::consts::PI / 2.0;
        assert_eq!(k, vec![0.0, dk, -2.0 * dk, -dk]);
        assert_eq!(g.wavenumbers(1), vec![0.0]);
    }
}
