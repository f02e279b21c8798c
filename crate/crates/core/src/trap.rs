//! Trap geometry, contact interactions and the species-dependent trapping
//! potentials.

use serde::{Deserialize, Serialize};

use crate::constants::{hz_to_angular, BOHR_RADIUS, HBAR, MASS_RB87, MICROMETRE, PLANCK};
use crate::error::{Error, Result};
use crate::field::RealField;
use crate::grid::Grid;

/// Internal state of the atom: |1⟩ carries the condensate, |2⟩ is the
/// displaced target state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Species {
    One,
    Two,
}

/// Harmonic trap shared by both internal states, with the |2⟩ trap shifted
/// by `delta_x` along x and an optional quartic correction along x.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrapSpec {
    /// Trap frequencies in Hz.
    pub fx: f64,
    pub fy: f64,
    pub fz: f64,
    /// Displacement of the |2⟩ trap along x, m.
    pub delta_x: f64,
    /// Quartic anharmonicity constant, s⁻¹·m⁻¹. Enters as ½mγ²x⁴.
    pub gamma: f64,
    /// Trap-bottom energy of |2⟩ relative to |1⟩, Hz.
    pub bottom_offset: f64,
}

impl TrapSpec {
    pub fn harmonic(fx: f64, fy: f64, fz: f64) -> Self {
        TrapSpec {
            fx,
            fy,
            fz,
            delta_x: 0.0,
            gamma: 0.0,
            bottom_offset: 0.0,
        }
    }

    /// The 112/517/517 Hz atom-chip trap with a 0.13 μm state-dependent
    /// displacement.
    pub fn chip_trap() -> Self {
        TrapSpec {
            delta_x: 0.13 * MICROMETRE,
            ..TrapSpec::harmonic(112.0, 517.0, 517.0)
        }
    }

    pub fn with_delta_x(mut self, delta_x: f64) -> Self {
        self.delta_x = delta_x;
        self
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, f) in [("trap.fx", self.fx), ("trap.fy", self.fy), ("trap.fz", self.fz)] {
            if !(f > 0.0 && f.is_finite()) {
                return Err(Error::param(name, format!("must be > 0, got {f}")));
            }
        }
        if !(self.delta_x >= 0.0) {
            return Err(Error::param("trap.delta_x", "must be >= 0"));
        }
        if !(self.gamma >= 0.0) {
            return Err(Error::param("trap.gamma", "must be >= 0"));
        }
        if !self.bottom_offset.is_finite() {
            return Err(Error::param("trap.bottom_offset", "must be finite"));
        }
        Ok(())
    }

    /// Angular trap frequencies (ωx, ωy, ωz) in rad/s.
    pub fn omegas(&self) -> [f64; 3] {
        [hz_to_angular(self.fx), hz_to_angular(self.fy), hz_to_angular(self.fz)]
    }

    /// Geometric mean ω̄ = (ωxωyωz)^(1/3).
    pub fn omega_bar(&self) -> f64 {
        let [wx, wy, wz] = self.omegas();
        (wx * wy * wz).cbrt()
    }

    /// Arithmetic mean (ωx+ωy+ωz)/3.
    pub fn omega_mean(&self) -> f64 {
        let [wx, wy, wz] = self.omegas();
        (wx + wy + wz) / 3.0
    }

    pub fn omega_max(&self) -> f64 {
        self.omegas().into_iter().fold(0.0, f64::max)
    }

    /// Oscillator lengths √(ħ/mω) per axis.
    pub fn oscillator_lengths(&self) -> [f64; 3] {
        self.omegas().map(|w| (HBAR / (MASS_RB87 * w)).sqrt())
    }

    /// √(ħ/mω̄).
    pub fn mean_oscillator_length(&self) -> f64 {
        (HBAR / (MASS_RB87 * self.omega_bar())).sqrt()
    }

    /// Zero-point energy ħ(ωx+ωy+ωz)/2 of the isotropic-free harmonic trap.
    pub fn zero_point_energy(&self) -> f64 {
        let [wx, wy, wz] = self.omegas();
        0.5 * HBAR * (wx + wy + wz)
    }

    /// Potential energy at a point for the given species, J.
    #[inline]
    pub fn potential_at(&self, species: Species, r: [f64; 3], include_quartic: bool) -> f64 {
        let [wx, wy, wz] = self.omegas();
        let (x, offset) = match species {
            Species::One => (r[0], 0.0),
            Species::Two => (r[0] - self.delta_x, PLANCK * self.bottom_offset),
        };
        let [y, z] = [r[1], r[2]];
        let mut v = 0.5 * MASS_RB87 * (wx * wx * x * x + wy * wy * y * y + wz * wz * z * z);
        if include_quartic {
            v += 0.5 * MASS_RB87 * self.gamma * self.gamma * x.powi(4);
        }
        v + offset
    }
}

/// s-wave scattering lengths in units of the Bohr radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InteractionSpec {
    pub a11: f64,
    pub a12: f64,
    pub a22: f64,
}

impl Default for InteractionSpec {
    fn default() -> Self {
        InteractionSpec {
            a11: 100.4,
            a12: 98.01,
            a22: 95.44,
        }
    }
}

/// Contact couplings g_ij in J·m³ (or the reduced-dimension equivalent).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Couplings {
    pub g11: f64,
    pub g12: f64,
    pub g22: f64,
}

impl Couplings {
    pub fn zero() -> Self {
        Couplings {
            g11: 0.0,
            g12: 0.0,
            g22: 0.0,
        }
    }

    pub fn scaled(self, factor: f64) -> Self {
        Couplings {
            g11: self.g11 * factor,
            g12: self.g12 * factor,
            g22: self.g22 * factor,
        }
    }
}

impl InteractionSpec {
    pub fn non_interacting() -> Self {
        InteractionSpec {
            a11: 0.0,
            a12: 0.0,
            a22: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, a) in [
            ("scattering.a11", self.a11),
            ("scattering.a12", self.a12),
            ("scattering.a22", self.a22),
        ] {
            if !a.is_finite() {
                return Err(Error::param(name, "must be finite"));
            }
        }
        Ok(())
    }

    /// g = 4πħ²a/m for a scattering length given in Bohr radii.
    pub fn coupling_from_bohr(a: f64) -> f64 {
        4.0 * std::f64::consts::PI * HBAR * HBAR * a * BOHR_RADIUS / MASS_RB87
    }

    pub fn couplings(&self) -> Couplings {
        Couplings {
            g11: Self::coupling_from_bohr(self.a11),
            g12: Self::coupling_from_bohr(self.a12),
            g22: Self::coupling_from_bohr(self.a22),
        }
    }

    /// Couplings appropriate for the grid's dimensionality. A grid with a
    /// single point along y and z is the effective-1D model along x: the
    /// couplings are integrated over the transverse Gaussian ground state,
    /// g1D = g/(2π a⊥²) with a⊥ = √(ħ/mω⊥), ω⊥ = √(ωyωz).
    pub fn couplings_on(&self, grid: &Grid, trap: &TrapSpec) -> Couplings {
        let g = self.couplings();
        if grid.is_line() {
            let [_, wy, wz] = trap.omegas();
            let a_perp_sq = HBAR / (MASS_RB87 * (wy * wz).sqrt());
            g.scaled(1.0 / (2.0 * std::f64::consts::PI * a_perp_sq))
        } else {
            g
        }
    }
}

/// Trapping potential of `species` sampled on `grid`. The |2⟩ potential is
/// evaluated analytically at x − δx, never by resampling.
pub fn trap_potential(
    trap: &TrapSpec,
    grid: &Grid,
    species: Species,
    include_quartic: bool,
) -> RealField {
    let values = grid
        .points()
        .map(|r| trap.potential_at(species, r, include_quartic))
        .collect();
    RealField::new(grid.clone(), values)
}
