//! Three-dimensional FFTs over a [`Grid`] and the spectral kinetic operator.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::constants::{HBAR, MASS_RB87};
use crate::grid::Grid;

/// Separable 3D FFT on x-fastest data. Axes of length 1 are skipped.
pub struct Fft3 {
    dims: [usize; 3],
    forward: [Arc<dyn Fft<f64>>; 3],
    inverse: [Arc<dyn Fft<f64>>; 3],
    scratch: Vec<Complex64>,
    transposed: Vec<Complex64>,
}

impl Fft3 {
    pub fn new(grid: &Grid) -> Self {
        let mut planner = FftPlanner::new();
        let dims = grid.dims;
        let forward = dims.map(|n| planner.plan_fft_forward(n));
        let inverse = dims.map(|n| planner.plan_fft_inverse(n));
        let scratch_len = forward
            .iter()
            .chain(inverse.iter())
            .map(|f| f.get_inplace_scratch_len())
            .max()
            .unwrap_or(0);
        Fft3 {
            dims,
            forward,
            inverse,
            scratch: vec![Complex64::default(); scratch_len],
            transposed: vec![Complex64::default(); grid.len()],
        }
    }

    /// Unnormalized forward transform in place. Input is in grid storage
    /// order (x fastest); output is in Fourier order with z fastest, see
    /// [`Fft3::fourier_index`].
    pub fn forward(&mut self, data: &mut [Complex64]) {
        let [nx, ny, nz] = self.dims;
        debug_assert_eq!(data.len(), nx * ny * nz);
        if nx > 1 {
            self.forward[0].process_with_scratch(data, &mut self.scratch);
        }
        // [z][y][x] -> [x][z][y]
        transpose::transpose(data, &mut self.transposed, nx, ny * nz);
        if ny > 1 {
            self.forward[1].process_with_scratch(&mut self.transposed, &mut self.scratch);
        }
        // [x][z][y] -> [x][y][z]
        let block = ny * nz;
        for (src, dst) in self.transposed.chunks_exact(block).zip(data.chunks_exact_mut(block)) {
            transpose::transpose(src, dst, ny, nz);
        }
        if nz > 1 {
            self.forward[2].process_with_scratch(data, &mut self.scratch);
        }
    }

    /// Inverse of [`Fft3::forward`], including the 1/N scaling.
    pub fn inverse(&mut self, data: &mut [Complex64]) {
        self.inverse_unnormalized(data);
        let scale = 1.0 / data.len() as f64;
        data.iter_mut().for_each(|v| *v *= scale);
    }

    /// [`Fft3::inverse`] without the 1/N factor, for callers that fold it
    /// into a diagonal multiply.
    pub fn inverse_unnormalized(&mut self, data: &mut [Complex64]) {
        let [nx, ny, nz] = self.dims;
        debug_assert_eq!(data.len(), nx * ny * nz);
        if nz > 1 {
            self.inverse[2].process_with_scratch(data, &mut self.scratch);
        }
        let block = ny * nz;
        for (src, dst) in data.chunks_exact(block).zip(self.transposed.chunks_exact_mut(block)) {
            transpose::transpose(src, dst, nz, ny);
        }
        if ny > 1 {
            self.inverse[1].process_with_scratch(&mut self.transposed, &mut self.scratch);
        }
        transpose::transpose(&self.transposed, data, ny * nz, nx);
        if nx > 1 {
            self.inverse[0].process_with_scratch(data, &mut self.scratch);
        }
    }

    /// Position of Fourier mode (ix, iy, iz) in the transformed buffer.
    #[inline]
    pub fn fourier_index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        iz + self.dims[2] * (iy + self.dims[1] * ix)
    }
}

/// Kinetic operator −ħ²∇²/2m applied in Fourier space.
pub struct KineticOperator {
    pub fft: Fft3,
    /// ħ²k²/2m per Fourier mode, J.
    energies: Vec<f64>,
    buffer: Vec<Complex64>,
    volume_element: f64,
}

impl KineticOperator {
    pub fn new(grid: &Grid) -> Self {
        let kx = grid.wavenumbers(0);
        let ky = grid.wavenumbers(1);
        let kz = grid.wavenumbers(2);
        let scale = HBAR * HBAR / (2.0 * MASS_RB87);
        // Fourier layout: z fastest, x slowest.
        let mut energies = Vec::with_capacity(grid.len());
        for x in &kx {
            for y in &ky {
                for z in &kz {
                    energies.push(scale * (x * x + y * y + z * z));
                }
            }
        }
        KineticOperator {
            fft: Fft3::new(grid),
            energies,
            buffer: vec![Complex64::default(); grid.len()],
            volume_element: grid.volume_element(),
        }
    }

    /// ħ²k²/2m for every Fourier mode in FFT order.
    pub fn mode_energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn max_energy(&self) -> f64 {
        self.energies.iter().cloned().fold(0.0, f64::max)
    }

    /// out = T·psi.
    pub fn apply(&mut self, psi: &[Complex64], out: &mut [Complex64]) {
        out.copy_from_slice(psi);
        self.fft.forward(out);
        for (v, e) in out.iter_mut().zip(&self.energies) {
            *v *= *e;
        }
        self.fft.inverse(out);
    }

    /// ⟨psi|T|psi⟩ with the grid volume element, via Parseval.
    pub fn expectation(&mut self, psi: &[Complex64]) -> f64 {
        self.buffer.copy_from_slice(psi);
        self.fft.forward(&mut self.buffer);
        let sum: f64 = self
            .buffer
            .iter()
            .zip(&self.energies)
            .map(|(v, e)| v.norm_sqr() * e)
            .sum();
        sum * self.volume_element / psi.len() as f64
    }

    /// Multiplies psi by per-mode factors given in Fourier layout.
    pub fn apply_diagonal(&mut self, psi: &mut [Complex64], factors: &[Complex64]) {
        self.fft.forward(psi);
        for (v, f) in psi.iter_mut().zip(factors) {
            *v *= *f;
        }
        self.fft.inverse(psi);
    }

    /// Real-valued variant of [`KineticOperator::apply_diagonal`].
    pub fn apply_real_diagonal(&mut self, psi: &mut [Complex64], factors: &[f64]) {
        self.fft.forward(psi);
        for (v, f) in psi.iter_mut().zip(factors) {
            *v *= *f;
        }
        self.fft.inverse(psi);
    }

    /// Kinetic energy with a second-order central-difference Laplacian on the
    /// periodic grid. Used to check the spectral route.
    pub fn finite_difference_expectation(grid: &Grid, psi: &[Complex64]) -> f64 {
        let [nx, ny, nz] = grid.dims;
        let scale = HBAR * HBAR / (2.0 * MASS_RB87);
        let mut total = 0.0;
        for iz in 0..nz {
            for iy in 0..ny {
                for ix in 0..nx {
                    let i = grid.index(ix, iy, iz);
                    let mut lap = Complex64::default();
                    for (axis, (n, d)) in grid.dims.iter().zip(&grid.spacing).enumerate() {
                        if *n == 1 {
                            continue;
                        }
                        let (prev, next) = match axis {
                            0 => (grid.index((ix + nx - 1) % nx, iy, iz), grid.index((ix + 1) % nx, iy, iz)),
                            1 => (grid.index(ix, (iy + ny - 1) % ny, iz), grid.index(ix, (iy + 1) % ny, iz)),
                            _ => (grid.index(ix, iy, (iz + nz - 1) % nz), grid.index(ix, iy, (iz + 1) % nz)),
                        };
                        lap += (psi[prev] + psi[next] - psi[i] * 2.0) / (d * d);
                    }
                    total += -(psi[i].conj() * lap).re;
                }
            }
        }
        total * scale * grid.volume_element()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(grid: &Grid, widths: [f64; 3]) -> Vec<Complex64> {
        grid.points()
            .map(|r| {
                let e: f64 = (0..3).map(|a| r[a] * r[a] / (2.0 * widths[a] * widths[a])).sum();
                Complex64::new((-e).exp(), 0.0)
            })
            .collect()
    }

    #[test]
    fn forward_inverse_round_trip() {
        let grid = Grid::new([8, 4, 16], [1.0, 1.0, 1.0]).unwrap();
        let data: Vec<Complex64> = (0..grid.len())
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let mut work = data.clone();
        let mut fft = Fft3::new(&grid);
        fft.forward(&mut work);
        fft.inverse(&mut work);
        for (a, b) in data.iter().zip(&work) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn single_plane_wave_lands_in_one_bin() {
        let grid = Grid::new([8, 8, 8], [1.0, 1.0, 1.0]).unwrap();
        let k = [grid.wavenumbers(0)[1], grid.wavenumbers(1)[2], grid.wavenumbers(2)[7]];
        let mut data: Vec<Complex64> = grid
            .points()
            .map(|r| Complex64::from_polar(1.0, k[0] * r[0] + k[1] * r[1] + k[2] * r[2]))
            .collect();
        let mut fft = Fft3::new(&grid);
        fft.forward(&mut data);
        let peak = fft.fourier_index(1, 2, 7);
        for (i, v) in data.iter().enumerate() {
            if i == peak {
                assert!((v.norm() - grid.len() as f64).abs() < 1e-9);
            } else {
                assert!(v.norm() < 1e-9);
            }
        }
    }

    #[test]
    fn spectral_and_finite_difference_kinetic_agree() {
        // Error of the central difference is O(dx²): halving dx cuts it ~4x.
        let widths = [1.0e-6, 0.6e-6, 0.5e-6];
        let mut errors = Vec::new();
        for n in [16usize, 32] {
            let grid = Grid::new([2 * n, n, n], [12e-6 / (2 * n) as f64, 6e-6 / n as f64, 6e-6 / n as f64]).unwrap();
            let psi = gaussian(&grid, widths);
            let spectral = KineticOperator::new(&grid).expectation(&psi);
            let fd = KineticOperator::finite_difference_expectation(&grid, &psi);
            errors.push(((spectral - fd) / spectral).abs());
        }
        assert!(errors[1] < 0.02);
        let ratio = errors[0] / errors[1];
        assert!(ratio > 3.5 && ratio < 4.5, "ratio {ratio}");
    }
}
