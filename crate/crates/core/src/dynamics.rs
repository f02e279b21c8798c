//! Real-time Rabi dynamics of the coupled two-component condensate.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::{hz_to_angular, HBAR};
use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::grid::Grid;
use crate::groundstate::GroundState;
use crate::spectra::{CurvePoint, Normalization, Spectrum};
use crate::spectral::KineticOperator;
use crate::trap::{trap_potential, Couplings, InteractionSpec, Species, TrapSpec};

/// Square Rabi pulse in the rotating frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseSpec {
    /// Ω, rad/s.
    pub rabi_frequency: f64,
    /// s.
    pub duration: f64,
    /// Δ, rad/s.
    pub detuning: f64,
}

impl PulseSpec {
    /// Pulse from frequencies in Hz.
    pub fn from_hz(rabi_hz: f64, duration: f64, detuning_hz: f64) -> Self {
        PulseSpec {
            rabi_frequency: hz_to_angular(rabi_hz),
            duration,
            detuning: hz_to_angular(detuning_hz),
        }
    }

    pub fn with_detuning_hz(self, detuning_hz: f64) -> Self {
        PulseSpec {
            detuning: hz_to_angular(detuning_hz),
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rabi_frequency >= 0.0) || !self.rabi_frequency.is_finite() {
            return Err(Error::param("pulse.rabi_hz", "must be >= 0"));
        }
        if !(self.duration > 0.0) || !self.duration.is_finite() {
            return Err(Error::param("pulse.duration_ms", "must be > 0"));
        }
        if !self.detuning.is_finite() {
            return Err(Error::param("pulse.detuning", "must be finite"));
        }
        Ok(())
    }

    /// Warns when the drive is not weak compared with the slowest trap
    /// frequency (ratio above 0.1). Returns the ratio.
    pub fn check_weak_drive(&self, omega_min: f64) -> f64 {
        let ratio = self.rabi_frequency / omega_min;
        if ratio > 0.1 {
            log::warn!("Rabi frequency is {ratio:.3} of the slowest trap frequency; the weak-drive picture is questionable");
        }
        ratio
    }

    /// Two-level transfer probability of a square pulse at detuning
    /// `detuning` (rad/s): Ω²/(Ω²+Δ²)·sin²(√(Ω²+Δ²)t/2).
    pub fn two_level_transfer(&self, detuning: f64) -> f64 {
        let omega2 = self.rabi_frequency * self.rabi_frequency;
        let generalized2 = omega2 + detuning * detuning;
        if generalized2 == 0.0 {
            return 0.0;
        }
        let s = (generalized2.sqrt() * self.duration / 2.0).sin();
        omega2 / generalized2 * s * s
    }
}

/// Both components on a shared grid at time `time` (s, measured from the
/// start of the pulse).
#[derive(Debug, Clone)]
pub struct TwoComponentState {
    pub psi1: ComplexField,
    pub psi2: ComplexField,
    pub time: f64,
}

impl TwoComponentState {
    /// Ground state in |1⟩, empty |2⟩.
    pub fn from_ground(ground: &GroundState) -> Self {
        TwoComponentState {
            psi1: ground.psi1.clone(),
            psi2: ComplexField::zeros(ground.grid(), 0.0),
            time: 0.0,
        }
    }

    /// (N₁, N₂).
    pub fn populations(&self) -> (f64, f64) {
        (self.psi1.norm(), self.psi2.norm())
    }

    /// N₂/(N₁ + N₂).
    pub fn transfer_fraction(&self) -> f64 {
        let (n1, n2) = self.populations();
        n2 / (n1 + n2)
    }
}

/// Strang integrator for the coupled equations
///
/// iħ∂ₜΨ₁ = [T + V₁ + g₁₁|Ψ₁|² + g₁₂|Ψ₂|²]Ψ₁ + (ħΩ/2)e^{+iΔt}Ψ₂
/// iħ∂ₜΨ₂ = [T + V₂ + g₂₂|Ψ₂|² + g₁₂|Ψ₁|²]Ψ₂ + (ħΩ/2)e^{−iΔt}Ψ₁
///
/// so that |2⟩ modes at E₂β are driven resonantly from the condensate at
/// Δ = (E₂β − μ)/ħ. Each step is half a kinetic step, the exact pointwise
/// 2×2 local propagator with densities held at their predicted midpoint
/// values, and another half kinetic step; the adjacent half steps of
/// consecutive steps are fused.
pub struct CoupledPropagator {
    kinetic: KineticOperator,
    /// e^{−iTdt/2ħ}/N and e^{−iTdt/ħ}/N in Fourier layout.
    half_kinetic: Vec<Complex64>,
    full_kinetic: Vec<Complex64>,
    /// e^{−i(V₁+V₂)dt/2ħ} per grid point.
    mean_phase: Vec<Complex64>,
    /// (V₁ − V₂)/2ħ per grid point, rad/s.
    half_split: Vec<f64>,
    /// Couplings over ħ, rad·m³/s.
    g11: f64,
    g12: f64,
    g22: f64,
    pulse: PulseSpec,
    dt: f64,
}

impl CoupledPropagator {
    pub fn new(grid: &Grid, trap: &TrapSpec, couplings: Couplings, pulse: &PulseSpec, dt: f64) -> Result<Self> {
        pulse.validate()?;
        trap.validate()?;
        if !(dt.abs() > 0.0) || !dt.is_finite() {
            return Err(Error::param("solver.dt_real_us", "must be nonzero and finite"));
        }
        if dt.abs() * trap.omega_max() >= 0.2 {
            return Err(Error::param(
                "solver.dt_real_us",
                format!("dt·ω_max = {:.3} must stay below 0.2", dt.abs() * trap.omega_max()),
            ));
        }
        pulse.check_weak_drive(trap.omegas().iter().cloned().fold(f64::INFINITY, f64::min));
        let v1 = trap_potential(trap, grid, Species::One, false);
        let v2 = trap_potential(trap, grid, Species::Two, false);
        let kinetic = KineticOperator::new(grid);
        let inv_n = 1.0 / grid.len() as f64;
        let phase = |e: f64, t: f64| Complex64::from_polar(inv_n, -e * t / HBAR);
        let half_kinetic = kinetic.mode_energies().iter().map(|&e| phase(e, 0.5 * dt)).collect();
        let full_kinetic = kinetic.mode_energies().iter().map(|&e| phase(e, dt)).collect();
        let mean_phase = v1
            .values
            .iter()
            .zip(&v2.values)
            .map(|(a, b)| Complex64::from_polar(1.0, -0.5 * (a + b) * dt / HBAR))
            .collect();
        let half_split = v1.values.iter().zip(&v2.values).map(|(a, b)| 0.5 * (a - b) / HBAR).collect();
        Ok(CoupledPropagator {
            kinetic,
            half_kinetic,
            full_kinetic,
            mean_phase,
            half_split,
            g11: couplings.g11 / HBAR,
            g12: couplings.g12 / HBAR,
            g22: couplings.g22 / HBAR,
            pulse: *pulse,
            dt,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn kinetic_step(&mut self, state: &mut TwoComponentState, factors_full: bool) {
        let factors = if factors_full { &self.full_kinetic } else { &self.half_kinetic };
        for psi in [&mut state.psi1.values, &mut state.psi2.values] {
            self.kinetic.fft.forward(psi);
            psi.iter_mut().zip(factors).for_each(|(v, f)| *v *= f);
            self.kinetic.fft.inverse_unnormalized(psi);
        }
    }

    /// Exact local propagator over dt around the substep midpoint `t_mid`.
    /// Returns Σ(|ψ₁|² + |ψ₂|²) afterwards (without the volume element).
    fn local_step(&self, state: &mut TwoComponentState, t_mid: f64) -> f64 {
        let dt = self.dt;
        // Off-diagonal element over ħ acting on Ψ₂ in the Ψ₁ equation.
        let b = Complex64::from_polar(0.5 * self.pulse.rabi_frequency, self.pulse.detuning * t_mid);
        let b_abs2 = b.norm_sqr();
        let (g11, g12, g22) = (self.g11, self.g12, self.g22);
        let mut total = 0.0;
        let values = state.psi1.values.iter_mut().zip(state.psi2.values.iter_mut());
        for (((p1, p2), mean), split) in values.zip(&self.mean_phase).zip(&self.half_split) {
            let (u, v) = (*p1, *p2);
            let (n1, n2) = (u.norm_sqr(), v.norm_sqr());
            // dN₁/dt = 2·Im(b·ψ₁*ψ₂); move densities to the substep midpoint.
            let dn = dt * (b * u.conj() * v).im;
            let (n1, n2) = (n1 + dn, n2 - dn);
            let d1 = g11 * n1 + g12 * n2;
            let d2 = g22 * n2 + g12 * n1;
            let a = split + 0.5 * (d1 - d2);
            let r = (a * a + b_abs2).sqrt();
            let (sin_rt, cos_rt) = (r * dt).sin_cos();
            let s = if r * dt.abs() > 1e-12 { sin_rt / r } else { dt };
            let phase = mean * Complex64::from_polar(1.0, -0.5 * (d1 + d2) * dt);
            let ias = Complex64::new(0.0, a * s);
            let ibs = Complex64::new(0.0, s) * b;
            let ibs_conj = Complex64::new(0.0, s) * b.conj();
            *p1 = phase * ((cos_rt - ias) * u - ibs * v);
            *p2 = phase * ((cos_rt + ias) * v - ibs_conj * u);
            total += p1.norm_sqr() + p2.norm_sqr();
        }
        total
    }

    /// Advances `state` by `steps` steps of dt (negative dt runs backwards).
    pub fn run(&mut self, state: &mut TwoComponentState, steps: usize) -> Result<()> {
        if steps == 0 {
            return Ok(());
        }
        let dv = state.psi1.grid.volume_element();
        let start_norm = state.psi1.norm() + state.psi2.norm();
        self.kinetic_step(state, false);
        for step in 0..steps {
            // The kinetic factors are unitary, so the norm after the local
            // step is the norm after the whole step.
            let norm = self.local_step(state, state.time + 0.5 * self.dt) * dv;
            state.time += self.dt;
            self.kinetic_step(state, step + 1 < steps);
            if !norm.is_finite() || norm > 2.0 * start_norm + 1.0 {
                return Err(Error::NonFinite {
                    stage: "real-time step",
                    step: step + 1,
                });
            }
        }
        Ok(())
    }
}

/// One Strang step of the coupled equations.
pub fn step_coupled(
    state: &TwoComponentState,
    dt: f64,
    pulse: &PulseSpec,
    trap: &TrapSpec,
    inter: &InteractionSpec,
) -> Result<TwoComponentState> {
    if state.psi1.grid != state.psi2.grid {
        return Err(Error::GridMismatch);
    }
    if !(dt > 0.0) {
        return Err(Error::param("solver.dt_real_us", "must be > 0"));
    }
    let grid = &state.psi1.grid;
    let mut prop = CoupledPropagator::new(grid, trap, inter.couplings_on(grid, trap), pulse, dt)?;
    let mut next = state.clone();
    prop.run(&mut next, 1)?;
    Ok(next)
}

/// Number of steps covering `duration` and the step that divides it
/// exactly.
pub fn step_count(duration: f64, dt: f64) -> (usize, f64) {
    let steps = (duration / dt).round().max(1.0) as usize;
    (steps, duration / steps as f64)
}

#[derive(Debug, Clone)]
pub struct PulseOutcome {
    pub transfer_fraction: f64,
    pub final_state: TwoComponentState,
    /// |N₁ + N₂ − N|/N at the end of the pulse.
    pub norm_drift: f64,
    pub steps: usize,
}

/// Runs one square pulse from the condensate and reports the transferred
/// fraction.
pub fn propagate_pulse(ground: &GroundState, pulse: &PulseSpec, dt: f64) -> Result<PulseOutcome> {
    let (steps, dt) = step_count(pulse.duration, dt);
    let mut prop = CoupledPropagator::new(ground.grid(), &ground.trap, ground.couplings, pulse, dt)?;
    let mut state = TwoComponentState::from_ground(ground);
    prop.run(&mut state, steps)?;
    let (n1, n2) = state.populations();
    Ok(PulseOutcome {
        transfer_fraction: n2 / (n1 + n2),
        norm_drift: ((n1 + n2) - ground.n_atoms).abs() / ground.n_atoms,
        final_state: state,
        steps,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepPoint {
    pub detuning_hz: f64,
    pub transfer: Option<f64>,
    pub norm_drift: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct Sweep {
    /// Curve of (Δ, transfer) over the successful points; no lines.
    pub spectrum: Spectrum,
    pub points: Vec<SweepPoint>,
}

/// Independent pulses at each detuning (Hz), run on `workers` threads.
/// Results come back in input order and do not depend on scheduling.
pub fn sweep_detuning(
    ground: &GroundState,
    template: &PulseSpec,
    detunings_hz: &[f64],
    dt: f64,
    workers: usize,
) -> Result<Sweep> {
    if detunings_hz.is_empty() {
        return Err(Error::param("sweep.points", "detuning list is empty"));
    }
    template.validate()?;
    let run = |d: &f64| match propagate_pulse(ground, &template.with_detuning_hz(*d), dt) {
        Ok(out) => SweepPoint {
            detuning_hz: *d,
            transfer: Some(out.transfer_fraction),
            norm_drift: Some(out.norm_drift),
            error: None,
        },
        Err(e) => {
            log::warn!("sweep point at {d} Hz failed: {e}");
            SweepPoint {
                detuning_hz: *d,
                transfer: None,
                norm_drift: None,
                error: Some(e.to_string()),
            }
        }
    };
    let points: Vec<SweepPoint> = if workers <= 1 {
        detunings_hz.iter().map(run).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::param("workers", e.to_string()))?;
        pool.install(|| detunings_hz.par_iter().map(run).collect())
    };
    if points.iter().all(|p| p.transfer.is_none()) {
        return Err(Error::SweepFailed(format!(
            "all {} detunings failed; first error: {}",
            points.len(),
            points[0].error.clone().unwrap_or_default()
        )));
    }
    let curve = points
        .iter()
        .filter_map(|p| {
            p.transfer.map(|t| CurvePoint {
                detuning_hz: p.detuning_hz,
                amplitude: t,
            })
        })
        .collect();
    Ok(Sweep {
        spectrum: Spectrum {
            lines: Vec::new(),
            curve,
            normalization: Normalization::Raw,
        },
        points,
    })
}
