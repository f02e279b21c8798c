//! Physical constants (CODATA 2018) and the unit conversions used at the
//! configuration boundary. Everything inside the library is SI.

use std::f64::consts::PI;

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Planck constant, J·s.
pub const PLANCK: f64 = 2.0 * PI * HBAR;
/// Boltzmann constant, J/K.
pub const K_BOLTZMANN: f64 = 1.380_649e-23;
/// Bohr radius, m.
pub const BOHR_RADIUS: f64 = 5.291_772_109_03e-11;
/// Atomic mass unit, kg.
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;
/// Mass of a ⁸⁷Rb atom (86.909 u), kg.
pub const MASS_RB87: f64 = 86.909 * ATOMIC_MASS_UNIT;

/// Riemann ζ(3).
pub const ZETA_3: f64 = 1.202_056_903_159_594_2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    pub hbar: f64,
    pub k_boltzmann: f64,
    pub bohr_radius: f64,
    pub mass_rb87: f64,
}

impl PhysicalConstants {
    pub const CODATA: PhysicalConstants = PhysicalConstants {
        hbar: HBAR,
        k_boltzmann: K_BOLTZMANN,
        bohr_radius: BOHR_RADIUS,
        mass_rb87: MASS_RB87,
    };
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::CODATA
    }
}

/// Energy `E` (J) expressed as a frequency `E/h` in Hz.
#[inline]
pub fn joule_to_hz(energy: f64) -> f64 {
    energy / PLANCK
}

/// Frequency in Hz to the energy `h·f` in J.
#[inline]
pub fn hz_to_joule(freq: f64) -> f64 {
    freq * PLANCK
}

/// Frequency in Hz to angular frequency in rad/s.
#[inline]
pub fn hz_to_angular(freq: f64) -> f64 {
    2.0 * PI * freq
}

pub const MICROMETRE: f64 = 1e-6;
pub const NANOKELVIN: f64 = 1e-9;
pub const MILLISECOND: f64 = 1e-3;
pub const MICROSECOND: f64 = 1e-6;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_positive() {
        let c = PhysicalConstants::CODATA;
        for v in [c.hbar, c.k_boltzmann, c.bohr_radius, c.mass_rb87] {
            assert!(v > 0.0);
        }
        assert!((c.mass_rb87 - 1.443_160_e-25).abs() / c.mass_rb87 < 1e-5);
    }

    #[test]
    fn hz_joule_round_trip() {
        let e = hz_to_joule(966.0);
        assert!((joule_to_hz(e) - 966.0).abs() < 1e-12);
    }
}
