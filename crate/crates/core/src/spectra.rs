//! Golden-rule transition spectra: Franck-Condon weights, Bose-Einstein
//! occupations of the single-particle modes, and convolution with the
//! square-pulse lineshape.

use std::collections::BTreeMap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::constants::{K_BOLTZMANN, PLANCK};
use crate::dynamics::PulseSpec;
use crate::eigenmodes::{anharmonic_modes_1d, EigenSet};
use crate::error::{Error, Result};
use crate::field::{inner_product, ComplexField};
use crate::groundstate::GroundState;
use crate::trap::TrapSpec;

/// Lines lighter than this are dropped from thermal line lists.
pub const PRUNE_WEIGHT: f64 = 1e-9;

/// Initial motional state of a transition: the condensate or a
/// single-particle mode of |1⟩.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Alpha {
    Bec,
    Mode(usize),
}

impl Serialize for Alpha {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Alpha::Bec => s.serialize_str("BEC"),
            Alpha::Mode(i) => s.serialize_u64(*i as u64),
        }
    }
}

impl<'de> Deserialize<'de> for Alpha {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Index(usize),
            Name(String),
        }
        match Raw::deserialize(d)? {
            Raw::Index(i) => Ok(Alpha::Mode(i)),
            Raw::Name(s) if s == "BEC" => Ok(Alpha::Bec),
            Raw::Name(s) => Err(serde::de::Error::custom(format!("unknown alpha label `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumLine {
    pub detuning_hz: f64,
    pub weight: f64,
    pub alpha: Alpha,
    pub beta: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    Raw,
    UnitPeak,
    Matched,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub detuning_hz: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    /// Sorted by detuning.
    pub lines: Vec<SpectrumLine>,
    pub curve: Vec<CurvePoint>,
    pub normalization: Normalization,
}

impl Spectrum {
    pub fn peak_amplitude(&self) -> f64 {
        self.curve.iter().map(|p| p.amplitude).fold(0.0, f64::max)
    }
}

/// Evenly spaced detunings in Hz, both ends included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleGrid {
    pub min_hz: f64,
    pub max_hz: f64,
    pub step_hz: f64,
}

impl SampleGrid {
    pub fn samples(&self) -> Vec<f64> {
        if !(self.step_hz > 0.0) || !(self.max_hz >= self.min_hz) {
            return vec![self.min_hz];
        }
        let n = ((self.max_hz - self.min_hz) / self.step_hz + 1e-9).floor() as usize + 1;
        (0..n).map(|i| self.min_hz + i as f64 * self.step_hz).collect()
    }

    /// Range spanning every line with `margin_hz` to spare.
    pub fn covering(lines: &[SpectrumLine], margin_hz: f64, step_hz: f64) -> SampleGrid {
        let lo = lines.iter().map(|l| l.detuning_hz).fold(f64::INFINITY, f64::min);
        let hi = lines.iter().map(|l| l.detuning_hz).fold(f64::NEG_INFINITY, f64::max);
        if !lo.is_finite() {
            return SampleGrid {
                min_hz: -margin_hz,
                max_hz: margin_hz,
                step_hz,
            };
        }
        let min_hz = ((lo - margin_hz) / step_hz).floor() * step_hz;
        let max_hz = ((hi + margin_hz) / step_hz).ceil() * step_hz;
        SampleGrid { min_hz, max_hz, step_hz }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermalOccupations {
    /// K.
    pub temperature: f64,
    /// μ_th, J.
    pub chemical_potential: f64,
    /// n_α per species-1 mode.
    pub occupations: Vec<f64>,
    pub total_excited: f64,
}

/// |⟨initial|mode_β⟩|² with `initial` taken at unit norm.
pub fn overlap_weights(initial: &ComplexField, final_modes: &EigenSet) -> Result<Vec<f64>> {
    let norm = initial.norm();
    final_modes
        .modes
        .iter()
        .map(|m| Ok(inner_product(initial, m)?.norm_sqr() / (norm * m.norm())))
        .collect()
}

fn sort_lines(lines: &mut [SpectrumLine]) {
    lines.sort_by(|a, b| {
        a.detuning_hz
            .total_cmp(&b.detuning_hz)
            .then(a.alpha.cmp(&b.alpha))
            .then(a.beta.cmp(&b.beta))
    });
}

/// Transitions from the condensate into each species-2 mode: detuning
/// (E₂β − μ)/h, weight N·|⟨Ψ₁/√N|Ψ₂β⟩|².
pub fn zero_temperature_lines(ground: &GroundState, modes2: &EigenSet) -> Result<Vec<SpectrumLine>> {
    let weights = overlap_weights(&ground.psi1, modes2)?;
    let mut lines: Vec<SpectrumLine> = modes2
        .energies
        .iter()
        .zip(weights)
        .enumerate()
        .map(|(beta, (e, w))| SpectrumLine {
            detuning_hz: (e - ground.mu) / PLANCK,
            weight: ground.n_atoms * w,
            alpha: Alpha::Bec,
            beta,
        })
        .collect();
    sort_lines(&mut lines);
    Ok(lines)
}

/// 1/(e^x − 1), accurate for small x.
fn bose_factor(x: f64) -> f64 {
    1.0 / x.exp_m1()
}

/// Bose-Einstein occupations n_α = 1/(exp((E₁α − μ_th)/k_BT) − 1).
pub fn bose_occupations(modes1: &EigenSet, mu_th: f64, temperature: f64) -> Result<ThermalOccupations> {
    if !(temperature >= 0.0) || !temperature.is_finite() {
        return Err(Error::param("thermal.temperature_nk", "must be >= 0"));
    }
    for (index, &energy) in modes1.energies.iter().enumerate() {
        if !(energy > mu_th) {
            return Err(Error::ChemicalPotentialTooHigh {
                index,
                energy,
                mu: mu_th,
            });
        }
    }
    let kt = K_BOLTZMANN * temperature;
    let occupations: Vec<f64> = modes1
        .energies
        .iter()
        .map(|e| if kt == 0.0 { 0.0 } else { bose_factor((e - mu_th) / kt) })
        .collect();
    Ok(ThermalOccupations {
        temperature,
        chemical_potential: mu_th,
        total_excited: occupations.iter().sum(),
        occupations,
    })
}

/// Occupations with μ_th chosen so that Σn_α = `n_atoms` over the modes
/// given, found by bisection on ln(E₁₀ − μ_th).
pub fn fixed_number_occupations(modes1: &EigenSet, n_atoms: f64, temperature: f64) -> Result<ThermalOccupations> {
    if !(temperature > 0.0) || !temperature.is_finite() {
        return Err(Error::param("thermal.temperature_nk", "must be > 0"));
    }
    if !(n_atoms > 0.0) {
        return Err(Error::param("atoms.n", "must be > 0"));
    }
    let kt = K_BOLTZMANN * temperature;
    let e0 = modes1.energies[0];
    let total = |gap: f64| -> f64 { modes1.energies.iter().map(|e| bose_factor((e - e0 + gap) / kt)).sum() };
    // n₀ ≈ k_BT/gap, so this lower end always overshoots.
    let mut lo = (kt * 1e-3 / n_atoms).ln();
    let mut hi = kt.ln();
    let mut guard = 0;
    while total(hi.exp()) > n_atoms {
        hi += 2.0;
        guard += 1;
        if guard > 200 {
            return Err(Error::FugacityNotConverged("no upper bracket for E₁₀ − μ_th".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if total(mid.exp()) > n_atoms {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    let gap = (0.5 * (lo + hi)).exp();
    let residual = (total(gap) - n_atoms).abs() / n_atoms;
    if !(residual < 1e-8) {
        return Err(Error::FugacityNotConverged(format!(
            "atom number mismatch {residual:.3e} after bisection"
        )));
    }
    bose_occupations(modes1, e0 - gap, temperature)
}

/// Thermal transitions α → β at (E₂β − E₁α)/h with weight
/// n_α·|⟨Ψ₁α|Ψ₂β⟩|²; lines below [`PRUNE_WEIGHT`] are dropped.
pub fn thermal_lines(modes1: &EigenSet, modes2: &EigenSet, occ: &ThermalOccupations) -> Result<Vec<SpectrumLine>> {
    if occ.occupations.len() != modes1.energies.len() {
        return Err(Error::param("occupations", "must have one entry per species-1 mode"));
    }
    let mut lines = Vec::new();
    for (alpha, (mode1, &n)) in modes1.modes.iter().zip(&occ.occupations).enumerate() {
        if n * 1.0 < PRUNE_WEIGHT {
            continue;
        }
        for (beta, mode2) in modes2.modes.iter().enumerate() {
            let weight = n * inner_product(mode1, mode2)?.norm_sqr();
            if weight >= PRUNE_WEIGHT {
                lines.push(SpectrumLine {
                    detuning_hz: (modes2.energies[beta] - modes1.energies[alpha]) / PLANCK,
                    weight,
                    alpha: Alpha::Mode(alpha),
                    beta,
                });
            }
        }
    }
    sort_lines(&mut lines);
    Ok(lines)
}

/// Total weight per sideband order β − α (thermal lines only).
pub fn sideband_weights(lines: &[SpectrumLine]) -> BTreeMap<i64, f64> {
    let mut out = BTreeMap::new();
    for line in lines {
        if let Alpha::Mode(alpha) = line.alpha {
            *out.entry(line.beta as i64 - alpha as i64).or_insert(0.0) += line.weight;
        }
    }
    out
}

/// One sideband order β − α of a thermal spectrum as it shows up in the
/// convolved curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SidebandGroup {
    pub order: i64,
    /// Total line weight of the order.
    pub weight: f64,
    /// Weighted mean line position, Hz.
    pub center_hz: f64,
    /// Tallest curve maximum within `window_hz` of the center.
    pub peak: Peak,
}

/// Sideband orders whose lines produce a curve maximum within `window_hz`
/// of their weighted center, at least `rel_threshold` of the global curve
/// maximum high. Orders are returned in ascending order.
pub fn sideband_groups(spec: &Spectrum, window_hz: f64, rel_threshold: f64) -> Vec<SidebandGroup> {
    let mut sums: BTreeMap<i64, (f64, f64)> = BTreeMap::new();
    for line in &spec.lines {
        if let Alpha::Mode(alpha) = line.alpha {
            let entry = sums.entry(line.beta as i64 - alpha as i64).or_insert((0.0, 0.0));
            entry.0 += line.weight;
            entry.1 += line.weight * line.detuning_hz;
        }
    }
    let peaks = find_peaks(&spec.curve, rel_threshold);
    sums.into_iter()
        .filter(|(_, (w, _))| *w > 0.0)
        .filter_map(|(order, (weight, moment))| {
            let center_hz = moment / weight;
            peaks
                .iter()
                .filter(|p| (p.detuning_hz - center_hz).abs() <= window_hz)
                .max_by(|a, b| a.amplitude.total_cmp(&b.amplitude))
                .map(|&peak| SidebandGroup {
                    order,
                    weight,
                    center_hz,
                    peak,
                })
        })
        .collect()
}

/// Square-pulse two-level lineshape at `f_hz` from resonance.
pub fn lineshape_kernel(pulse: &PulseSpec, f_hz: f64) -> f64 {
    pulse.two_level_transfer(2.0 * std::f64::consts::PI * f_hz)
}

/// Full width at half maximum of the central lobe of the lineshape, Hz.
pub fn lineshape_fwhm(pulse: &PulseSpec) -> f64 {
    let half = 0.5 * lineshape_kernel(pulse, 0.0);
    if half == 0.0 {
        return 0.0;
    }
    let step = 1e-3 / pulse.duration;
    let mut hi = step;
    while lineshape_kernel(pulse, hi) > half {
        hi += step;
    }
    let mut lo = hi - step;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if lineshape_kernel(pulse, mid) > half {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo + hi
}

/// curve(Δ) = Σ weight·K(Δ − detuning) sampled on `sample`.
pub fn convolve_lineshape(lines: &[SpectrumLine], pulse: &PulseSpec, sample: &SampleGrid) -> Spectrum {
    let detunings = sample.samples();
    if let (Some(first), Some(last)) = (detunings.first(), detunings.last()) {
        let margin = 5.0 * lineshape_fwhm(pulse);
        if lines
            .iter()
            .any(|l| l.detuning_hz - margin < *first || l.detuning_hz + margin > *last)
        {
            log::warn!("sample range does not cover every line by five lineshape widths");
        }
    }
    let mut sorted = lines.to_vec();
    sort_lines(&mut sorted);
    let curve = detunings
        .iter()
        .map(|&d| CurvePoint {
            detuning_hz: d,
            amplitude: sorted
                .iter()
                .map(|l| l.weight * lineshape_kernel(pulse, d - l.detuning_hz))
                .sum(),
        })
        .collect();
    Spectrum {
        lines: sorted,
        curve,
        normalization: Normalization::Raw,
    }
}

pub fn normalize_spectrum(spec: &Spectrum, mode: Normalization, reference: Option<&Spectrum>) -> Result<Spectrum> {
    let factor = match mode {
        Normalization::Raw => return Ok(spec.clone()),
        Normalization::UnitPeak => 1.0,
        Normalization::Matched => reference.ok_or(Error::MissingReference)?.peak_amplitude(),
    };
    let peak = spec.peak_amplitude();
    if !(peak > 0.0) {
        return Err(Error::ZeroSpectrum);
    }
    let scale = factor / peak;
    let mut out = spec.clone();
    out.curve.iter_mut().for_each(|p| p.amplitude *= scale);
    out.lines.iter_mut().for_each(|l| l.weight *= scale);
    out.normalization = mode;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub detuning_hz: f64,
    pub amplitude: f64,
}

/// Local maxima of a sampled curve at least `rel_threshold` of the global
/// maximum high, refined by a parabola through the three nearest samples.
pub fn find_peaks(curve: &[CurvePoint], rel_threshold: f64) -> Vec<Peak> {
    let max = curve.iter().map(|p| p.amplitude).fold(0.0, f64::max);
    if !(max > 0.0) || curve.len() < 3 {
        return Vec::new();
    }
    let mut peaks = Vec::new();
    for i in 1..curve.len() - 1 {
        let (a, b, c) = (curve[i - 1].amplitude, curve[i].amplitude, curve[i + 1].amplitude);
        if b >= a && b > c && b >= rel_threshold * max {
            peaks.push(parabolic_vertex(&curve[i - 1..=i + 1]));
        }
    }
    peaks
}

/// [`find_peaks`] minus the side lobes of the pulse lineshape: walking down
/// from the tallest maximum, a peak is kept only if it rises 1.5× above the
/// summed lineshape envelopes Ω²/(Ω² + (2πf)²) of the taller peaks already
/// kept. Returned in ascending detuning.
pub fn resolved_peaks(curve: &[CurvePoint], pulse: &PulseSpec, rel_threshold: f64) -> Vec<Peak> {
    let omega2 = pulse.rabi_frequency * pulse.rabi_frequency;
    let center = lineshape_kernel(pulse, 0.0);
    let envelope = |f_hz: f64| {
        let w = 2.0 * std::f64::consts::PI * f_hz;
        if center > 0.0 {
            omega2 / (omega2 + w * w) / center
        } else {
            0.0
        }
    };
    let mut peaks = find_peaks(curve, rel_threshold);
    peaks.sort_by(|a, b| b.amplitude.total_cmp(&a.amplitude));
    let mut kept: Vec<Peak> = Vec::new();
    for p in peaks {
        let lobes: f64 = kept.iter().map(|k| k.amplitude * envelope(p.detuning_hz - k.detuning_hz)).sum();
        if p.amplitude > 1.5 * lobes {
            kept.push(p);
        }
    }
    kept.sort_by(|a, b| a.detuning_hz.total_cmp(&b.detuning_hz));
    kept
}

/// Vertex of the parabola through three points.
pub fn parabolic_vertex(p: &[CurvePoint]) -> Peak {
    let (x0, x1, x2) = (p[0].detuning_hz, p[1].detuning_hz, p[2].detuning_hz);
    let (y0, y1, y2) = (p[0].amplitude, p[1].amplitude, p[2].amplitude);
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let a = (d12 - d01) / (x2 - x0);
    if a >= 0.0 {
        return Peak {
            detuning_hz: x1,
            amplitude: y1,
        };
    }
    let b = d01 - a * (x0 + x1);
    let x = -b / (2.0 * a);
    let y = y1 + (x - x1) * (d01 + a * (x - x0));
    Peak {
        detuning_hz: x,
        amplitude: y,
    }
}

/// Lines of a hot cloud in the quartic 1D model: occupations fixed by the
/// atom number over the `k` lowest modes, all α → β transitions.
pub fn high_temperature_lines(
    trap: &TrapSpec,
    n_atoms: f64,
    temperature: f64,
    k: usize,
) -> Result<(Vec<SpectrumLine>, ThermalOccupations)> {
    if !(temperature > 0.0) {
        return Err(Error::param("thermal.temperature_nk", "must be > 0 for the high-temperature model"));
    }
    let (modes1, modes2) = anharmonic_modes_1d(trap, k)?;
    let occ = fixed_number_occupations(&modes1, n_atoms, temperature)?;
    Ok((thermal_lines(&modes1, &modes2, &occ)?, occ))
}

/// [`high_temperature_lines`] convolved with the pulse lineshape on a grid
/// of spacing `step_hz` covering every line.
pub fn high_temperature_spectrum(
    trap: &TrapSpec,
    n_atoms: f64,
    temperature: f64,
    k: usize,
    pulse: &PulseSpec,
    step_hz: f64,
) -> Result<(Spectrum, ThermalOccupations)> {
    let (lines, occ) = high_temperature_lines(trap, n_atoms, temperature, k)?;
    let sample = SampleGrid::covering(&lines, 5.0 * lineshape_fwhm(pulse) + 20.0, step_hz);
    Ok((convolve_lineshape(&lines, pulse, &sample), occ))
}
