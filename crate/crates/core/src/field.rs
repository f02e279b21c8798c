//! Sampled fields and the basic integrals over them.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::spectral::KineticOperator;

/// Complex wavefunction on a grid. `norm_target` is the particle number the
/// field is normalized to by [`ComplexField::renormalize`].
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    pub grid: Grid,
    pub values: Vec<Complex64>,
    pub norm_target: f64,
}

/// Real scalar field (potentials, densities).
#[derive(Debug, Clone, PartialEq)]
pub struct RealField {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl RealField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Self {
        assert_eq!(grid.len(), values.len(), "field size does not match grid");
        RealField { grid, values }
    }

    pub fn zeros(grid: &Grid) -> Self {
        RealField::new(grid.clone(), vec![0.0; grid.len()])
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

impl ComplexField {
    pub fn new(grid: Grid, values: Vec<Complex64>, norm_target: f64) -> Self {
        assert_eq!(grid.len(), values.len(), "field size does not match grid");
        ComplexField {
            grid,
            values,
            norm_target,
        }
    }

    pub fn zeros(grid: &Grid, norm_target: f64) -> Self {
        ComplexField::new(grid.clone(), vec![Complex64::default(); grid.len()], norm_target)
    }

    /// Real field promoted to complex.
    pub fn from_real(grid: &Grid, values: &[f64], norm_target: f64) -> Self {
        ComplexField::new(
            grid.clone(),
            values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
            norm_target,
        )
    }

    /// Σ|ψ|²·dV.
    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.volume_element()
    }

    /// Rescales so that Σ|ψ|²·dV equals `norm_target`. A zero field is left
    /// untouched.
    pub fn renormalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            let s = (self.norm_target / n).sqrt();
            self.values.iter_mut().for_each(|v| *v *= s);
        }
    }

    pub fn density(&self) -> RealField {
        RealField::new(self.grid.clone(), self.values.iter().map(|v| v.norm_sqr()).collect())
    }

    /// Copy rescaled to a new particle number.
    pub fn rescaled_to(&self, norm_target: f64) -> ComplexField {
        let mut f = self.clone();
        f.norm_target = norm_target;
        f.renormalize();
        f
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }
}

/// ⟨f|g⟩ = Σ f*·g·dV. Antilinear in `f`, linear in `g`.
pub fn inner_product(f: &ComplexField, g: &ComplexField) -> Result<Complex64> {
    if f.grid != g.grid {
        return Err(Error::GridMismatch);
    }
    let s: Complex64 = f.values.iter().zip(&g.values).map(|(a, b)| a.conj() * b).sum();
    Ok(s * f.grid.volume_element())
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Energies {
    pub kinetic: f64,
    pub potential: f64,
    pub interaction: f64,
}

impl Energies {
    pub fn total(&self) -> f64 {
        self.kinetic + self.potential + self.interaction
    }

    /// 2E_kin − 2E_pot + 3E_int, relative to 2|E_kin| + 2|E_pot| + 3|E_int|.
    /// Zero for a stationary state of the 3D GPE in a harmonic trap.
    pub fn virial_residual(&self) -> f64 {
        let v = 2.0 * self.kinetic - 2.0 * self.potential + 3.0 * self.interaction;
        let scale = 2.0 * self.kinetic.abs() + 2.0 * self.potential.abs() + 3.0 * self.interaction.abs();
        v / scale
    }
}

/// Kinetic (spectral Laplacian), potential and contact-interaction energy.
pub fn energy_functionals(psi: &ComplexField, potential: &RealField, g: f64) -> Result<Energies> {
    let mut kinetic = KineticOperator::new(&psi.grid);
    energy_functionals_with(&mut kinetic, psi, potential, g)
}

/// As [`energy_functionals`] with a reusable kinetic operator.
pub fn energy_functionals_with(
    kinetic: &mut KineticOperator,
    psi: &ComplexField,
    potential: &RealField,
    g: f64,
) -> Result<Energies> {
    if psi.grid != potential.grid {
        return Err(Error::GridMismatch);
    }
    let dv = psi.grid.volume_element();
    let mut e_pot = 0.0;
    let mut e_int = 0.0;
    for (v, pot) in psi.values.iter().zip(&potential.values) {
        let n = v.norm_sqr();
        e_pot += pot * n;
        e_int += n * n;
    }
    Ok(Energies {
        kinetic: kinetic.expectation(&psi.values),
        potential: e_pot * dv,
        interaction: 0.5 * g * e_int * dv,
    })
}
