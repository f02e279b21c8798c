//! Matrix-free block eigensolver for the low end of a real symmetric
//! operator.
//!
//! Locally optimal block preconditioned iteration: every step builds the
//! subspace `[X, T·R, P]` from the current Ritz vectors `X`, the
//! preconditioned residuals and the previous search directions, fully
//! reorthogonalizes it, and performs a Rayleigh-Ritz projection. Only
//! operator applications are needed; the Ritz problem is at most `3m × 3m`
//! for block size `m`.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Real symmetric operator on ℝⁿ.
pub trait SymmetricOperator {
    fn dim(&self) -> usize;

    /// y = A·x
    fn apply(&mut self, x: &[f64], y: &mut [f64]);

    /// Approximate (A − θ)⁻¹ acting on a residual. Must be symmetric positive
    /// definite. Defaults to the identity.
    fn precondition(&mut self, residual: &[f64], out: &mut [f64], _theta: f64) {
        out.copy_from_slice(residual);
    }

    /// ys[i] = A·xs[i]. Override when several vectors can share work.
    fn apply_block(&mut self, xs: &[Vec<f64>], ys: &mut [Vec<f64>]) {
        for (x, y) in xs.iter().zip(ys.iter_mut()) {
            self.apply(x, y);
        }
    }

    /// Preconditions `residuals[i]` with shift `thetas[i]` into `outs[i]`.
    fn precondition_block(&mut self, residuals: &[Vec<f64>], outs: &mut [Vec<f64>], thetas: &[f64]) {
        for ((r, o), &t) in residuals.iter().zip(outs.iter_mut()).zip(thetas) {
            self.precondition(r, o, t);
        }
    }
}

#[derive(Debug, Clone)]
pub struct BlockOptions {
    /// Absolute residual norm ‖Ax − θx‖ (with ‖x‖ = 1) at which a pair counts
    /// as converged.
    pub tol: f64,
    pub max_iter: usize,
}

#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    /// Orthonormal in the Euclidean inner product.
    pub vectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub iterations: usize,
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
}

fn scale(v: &mut [f64], s: f64) {
    v.iter_mut().for_each(|x| *x *= s);
}

/// Orthogonalizes `v` (and its image `av`, when given) against `basis`
/// with two passes of modified Gram-Schmidt. Returns the remaining norm.
fn orthogonalize(v: &mut [f64], mut av: Option<&mut [f64]>, basis: &[Vec<f64>], abasis: &[Vec<f64>]) -> f64 {
    for _ in 0..2 {
        for (i, b) in basis.iter().enumerate() {
            let c = dot(b, v);
            axpy(-c, b, v);
            if let Some(av) = av.as_deref_mut() {
                axpy(-c, &abasis[i], av);
            }
        }
    }
    dot(v, v).sqrt()
}

/// Lowest `k` eigenpairs starting from the block `initial` (block size
/// `m = initial.len() ≥ k`; the extra vectors only speed up convergence).
pub fn lowest_eigenpairs<O: SymmetricOperator>(
    op: &mut O,
    k: usize,
    initial: Vec<Vec<f64>>,
    opts: &BlockOptions,
) -> Result<EigenPairs> {
    let n = op.dim();
    let m = initial.len();
    assert!(k >= 1 && m >= k && m <= n, "block size must satisfy k <= m <= n");

    // Orthonormal starting block.
    let mut x: Vec<Vec<f64>> = Vec::with_capacity(m);
    for mut v in initial {
        assert_eq!(v.len(), n);
        let n0 = dot(&v, &v).sqrt();
        if !(n0 > 0.0 && n0.is_finite()) {
            return Err(Error::param("eigensolver", "initial block contains a zero or non-finite vector"));
        }
        scale(&mut v, 1.0 / n0);
        let norm = orthogonalize(&mut v, None, &x, &[]);
        if norm < 1e-10 {
            return Err(Error::param("eigensolver", "initial block is linearly dependent"));
        }
        scale(&mut v, 1.0 / norm);
        x.push(v);
    }
    let mut ax = vec![vec![0.0; n]; m];
    op.apply_block(&x, &mut ax);
    let mut theta = rayleigh_ritz_in_place(&mut x, &mut ax, m)?;
    let mut p: Vec<Vec<f64>> = Vec::new();

    let mut residual = vec![0.0; n];
    let mut residual_norms = vec![f64::INFINITY; m];
    for iter in 1..=opts.max_iter {
        if iter % 25 == 0 {
            // Refresh images to keep rounding drift out of the Ritz values.
            op.apply_block(&x, &mut ax);
        }
        let mut residuals: Vec<Vec<f64>> = Vec::new();
        let mut shifts = Vec::new();
        for i in 0..m {
            residual.copy_from_slice(&ax[i]);
            axpy(-theta[i], &x[i], &mut residual);
            residual_norms[i] = dot(&residual, &residual).sqrt();
            if residual_norms[i] >= opts.tol {
                residuals.push(residual.clone());
                shifts.push(theta[i]);
            }
        }
        if residual_norms[..k].iter().all(|&r| r < opts.tol) {
            return finish(op, x, k, iter);
        }
        let mut w_block = vec![vec![0.0; n]; residuals.len()];
        op.precondition_block(&residuals, &mut w_block, &shifts);

        let mut basis = x.clone();
        let mut fresh: Vec<Vec<f64>> = Vec::new();
        for mut w in w_block {
            let n0 = dot(&w, &w).sqrt();
            if !(n0 > 0.0 && n0.is_finite()) {
                continue;
            }
            scale(&mut w, 1.0 / n0);
            let norm = orthogonalize(&mut w, None, &basis, &[]);
            if norm < 1e-8 {
                continue;
            }
            scale(&mut w, 1.0 / norm);
            basis.push(w.clone());
            fresh.push(w);
        }
        let mut afresh = vec![vec![0.0; n]; fresh.len()];
        op.apply_block(&fresh, &mut afresh);
        let mut abasis = ax.clone();
        abasis.extend(afresh);
        // Search directions are re-applied rather than carried along: their
        // implicitly updated images drift once the block nears convergence.
        let mut directions: Vec<Vec<f64>> = Vec::new();
        for mut v in p.drain(..) {
            let n0 = dot(&v, &v).sqrt();
            if !(n0 > 0.0 && n0.is_finite()) {
                continue;
            }
            scale(&mut v, 1.0 / n0);
            let norm = orthogonalize(&mut v, None, &basis, &[]);
            if norm < 1e-8 {
                continue;
            }
            scale(&mut v, 1.0 / norm);
            basis.push(v.clone());
            directions.push(v);
        }
        let mut adirections = vec![vec![0.0; n]; directions.len()];
        op.apply_block(&directions, &mut adirections);
        abasis.extend(adirections);

        let (values, coeffs) = ritz(&basis, &abasis)?;
        let total = basis.len();
        let mut new_x = vec![vec![0.0; n]; m];
        let mut new_ax = vec![vec![0.0; n]; m];
        let mut new_p = vec![vec![0.0; n]; m];
        for j in 0..m {
            for i in 0..total {
                let c = coeffs[(i, j)];
                axpy(c, &basis[i], &mut new_x[j]);
                axpy(c, &abasis[i], &mut new_ax[j]);
                if i >= m {
                    axpy(c, &basis[i], &mut new_p[j]);
                }
            }
        }
        x = new_x;
        ax = new_ax;
        if total > m {
            p = new_p;
        }
        theta = values[..m].to_vec();
        if theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::NonFinite {
                stage: "eigensolver",
                step: iter,
            });
        }
    }
    let worst = residual_norms[..k].iter().cloned().fold(0.0, f64::max);
    Err(Error::EigenNotConverged {
        iterations: opts.max_iter,
        worst,
        residuals: residual_norms[..k].to_vec(),
    })
}

/// Eigen-decomposition of the projected matrix Bᵀ·A·B for an orthonormal
/// basis B, sorted ascending.
fn ritz(basis: &[Vec<f64>], abasis: &[Vec<f64>]) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let s = basis.len();
    let mut g = DMatrix::<f64>::zeros(s, s);
    for i in 0..s {
        for j in i..s {
            let v = 0.5 * (dot(&basis[i], &abasis[j]) + dot(&basis[j], &abasis[i]));
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            stage: "Rayleigh-Ritz projection",
            step: 0,
        });
    }
    let eig = SymmetricEigen::new(g);
    let mut order: Vec<usize> = (0..s).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let coeffs = DMatrix::from_fn(s, s, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, coeffs))
}

fn rayleigh_ritz_in_place(
    x: &mut Vec<Vec<f64>>,
    ax: &mut Vec<Vec<f64>>,
    keep: usize,
) -> Result<Vec<f64>> {
    let (values, coeffs) = ritz(x, ax)?;
    let n = x[0].len();
    let s = x.len();
    let mut nx = vec![vec![0.0; n]; keep];
    let mut nax = vec![vec![0.0; n]; keep];
    for j in 0..keep {
        for i in 0..s {
            axpy(coeffs[(i, j)], &x[i], &mut nx[j]);
            axpy(coeffs[(i, j)], &ax[i], &mut nax[j]);
        }
    }
    *x = nx;
    *ax = nax;
    Ok(values[..keep].to_vec())
}

/// Final clean-up: reorthonormalize, recompute images exactly, one last
/// Rayleigh-Ritz, and report true residuals for the first `k` pairs.
fn finish<O: SymmetricOperator>(op: &mut O, x: Vec<Vec<f64>>, k: usize, iterations: usize) -> Result<EigenPairs> {
    let n = op.dim();
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(x.len());
    for mut v in x {
        let norm = orthogonalize(&mut v, None, &q, &[]);
        scale(&mut v, 1.0 / norm);
        q.push(v);
    }
    let mut aq = vec![vec![0.0; n]; q.len()];
    op.apply_block(&q, &mut aq);
    let values = rayleigh_ritz_in_place(&mut q, &mut aq, k)?;
    let residuals = (0..k)
        .map(|i| {
            let mut r = aq[i].clone();
            axpy(-values[i], &q[i], &mut r);
            dot(&r, &r).sqrt()
        })
        .collect();
    q.truncate(k);
    Ok(EigenPairs {
        values,
        vectors: q,
        residuals,
        iterations,
    })
}
