//! Building fBm from the increments of a standard Brownian motion `W`.
//!
//! On a uniform grid the weight of increment `ΔW_j` in `B_H(t_i)` is the
//! cell average `M_ij = (1/dt) ∫_{s_j}^{s_{j+1}} K(t_i, s) ds`, obtained by
//! differencing the closed-form cross covariance `Cov(B_H(t), W(s))`. This
//! makes `Σ_j M_ij ΔW_j = E[B_H(t_i) | ΔW]` exactly.
//!
//! Two consumers:
//! * [`VolterraKernel`] is the deterministic synthesis `W ↦ B_H`. Column 0
//!   carries the integrable `s^{1/2-H}` singularity, where the cell average
//!   loses `O(dt^{2-2H})` of variance, so that column instead matches the
//!   cell's `L²` mass of the kernel.
//! * [`JointFbmSampler`] adds an independent Gaussian residual with
//!   covariance `Cov(B_H) − M Mᵀ dt`, so the pair `(W, B_H)` on the grid
//!   has exactly the joint law of the continuous-time construction.

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;

use super::kernel::{first_cell_energy, unit_cross_covariance};
use super::{FbmGrid, FbmPath, KernelSpec};
use crate::error::{domain, Error, Result};
use crate::rng::standard_normal;
use crate::scalar::Scalar;

const FIRST_CELL_LEVELS: i32 = 24;

#[inline]
fn row_offset(i: usize) -> usize {
    // rows are 1-based; row i holds columns 0..i
    i * (i - 1) / 2
}

/// Unit-step, unnormalized cell averages, packed by row (`i = 1..=n`).
fn unit_projection(n: usize, a: f64) -> Vec<f64> {
    let rows: Vec<Vec<f64>> = (1..=n)
        .into_par_iter()
        .map(|i| {
            let t = i as f64;
            let mut prev = 0.0;
            (0..i)
                .map(|j| {
                    let next = unit_cross_covariance(t, (j + 1) as f64, a);
                    let w = next - prev;
                    prev = next;
                    w
                })
                .collect()
        })
        .collect();
    rows.concat()
}

fn check_increments<T: Scalar>(grid: &FbmGrid<T>, dw: &[T]) -> Result<()> {
    if dw.len() != grid.n_steps() {
        return domain(format!(
            "expected {} Brownian increments, got {}",
            grid.n_steps(),
            dw.len()
        ));
    }
    Ok(())
}

/// Deterministic Volterra synthesis of fBm on a grid.
#[derive(Debug, Clone)]
pub struct VolterraKernel<T> {
    grid: FbmGrid<T>,
    spec: KernelSpec<T>,
    weights: Vec<T>,
}

impl<T: Scalar> VolterraKernel<T> {
    pub fn new(grid: FbmGrid<T>, spec: KernelSpec<T>) -> Result<Self> {
        let n = grid.n_steps();
        let a = spec.exponent();
        let scale = spec.normalization().as_f64() * grid.dt().as_f64().powf(a);
        let mut unit = unit_projection(n, a);
        let first: Vec<f64> = (1..=n)
            .into_par_iter()
            .map(|i| first_cell_energy(i as f64, a, FIRST_CELL_LEVELS).sqrt())
            .collect();
        for (i, w) in (1..=n).zip(first) {
            unit[row_offset(i)] = w;
        }
        Ok(Self {
            grid,
            spec,
            weights: unit.into_iter().map(|w| T::lit(w * scale)).collect(),
        })
    }

    pub fn grid(&self) -> &FbmGrid<T> {
        &self.grid
    }

    pub fn spec(&self) -> &KernelSpec<T> {
        &self.spec
    }

    /// Weight of increment `j` in `B_H(t_i)`, zero for `j >= i`.
    pub fn weight(&self, i: usize, j: usize) -> T {
        if i == 0 || j >= i {
            T::zero()
        } else {
            self.weights[row_offset(i) + j]
        }
    }

    /// Exact covariance of the synthesized values at grid points `i` and `k`
    /// when the input increments are those of a standard Brownian motion.
    pub fn discrete_covariance(&self, i: usize, k: usize) -> T {
        let m = i.min(k);
        let acc: T = (0..m).map(|j| self.weight(i, j) * self.weight(k, j)).sum();
        acc * self.grid.dt()
    }

    pub fn synthesize(&self, dw: &[T]) -> Result<FbmPath<T>> {
        check_increments(&self.grid, dw)?;
        let n = self.grid.n_steps();
        let mut values = Vec::with_capacity(n + 1);
        values.push(T::zero());
        for i in 1..=n {
            let row = &self.weights[row_offset(i)..row_offset(i) + i];
            values.push(row.iter().zip(dw).map(|(&w, &x)| w * x).sum());
        }
        Ok(FbmPath::from_parts(self.grid, self.spec.hurst(), values))
    }
}

/// Synthesizes `B_H(t_i) = Σ_j K(t_i, ·) ΔW_j` from Brownian increments.
///
/// Builds the weight table on every call; reuse a [`VolterraKernel`] when
/// synthesizing many paths on the same grid.
pub fn fbm_via_kernel<T: Scalar>(
    grid: FbmGrid<T>,
    spec: &KernelSpec<T>,
    w_increments: &[T],
) -> Result<FbmPath<T>> {
    check_increments(&grid, w_increments)?;
    VolterraKernel::new(grid, *spec)?.synthesize(w_increments)
}

/// Exact joint sampler of `(W, B_H)` on a grid.
#[derive(Debug, Clone)]
pub struct JointFbmSampler<T> {
    grid: FbmGrid<T>,
    spec: KernelSpec<T>,
    projection: Vec<T>,
    /// Packed lower Cholesky factor of the residual covariance.
    residual: Vec<T>,
}

impl<T: Scalar> JointFbmSampler<T> {
    pub fn new(grid: FbmGrid<T>, spec: KernelSpec<T>) -> Result<Self> {
        let n = grid.n_steps();
        let a = spec.exponent();
        let h = spec.hurst().as_f64();
        let c = spec.normalization().as_f64();
        let unit: Vec<f64> = unit_projection(n, a).into_iter().map(|w| w * c).collect();

        // residual covariance at dt = 1; every term scales as dt^{2H}
        let row = |i: usize| &unit[row_offset(i)..row_offset(i) + i];
        let lower: Vec<Vec<f64>> = (1..=n)
            .into_par_iter()
            .map(|i| {
                let ri = row(i);
                let ti = (i as f64).powf(2.0 * h);
                (1..=i)
                    .map(|k| {
                        let rk = row(k);
                        let tk = (k as f64).powf(2.0 * h);
                        let gamma = 0.5 * (ti + tk - ((i - k) as f64).powf(2.0 * h));
                        let proj: f64 = ri[..k].iter().zip(rk).map(|(x, y)| x * y).sum();
                        gamma - proj
                    })
                    .collect()
            })
            .collect();
        let cov = DMatrix::from_fn(n, n, |r, col| {
            let (hi, lo) = if r >= col { (r, col) } else { (col, r) };
            lower[hi][lo]
        });
        let chol = cov.cholesky().ok_or_else(|| {
            Error::Internal(format!(
                "residual covariance of the joint (W, B_H) law is not positive definite (n={n}, H={h})"
            ))
        })?;
        let l = chol.l();

        let dt = grid.dt().as_f64();
        let proj_scale = dt.powf(a);
        let resid_scale = dt.powf(h);
        let mut residual = Vec::with_capacity(n * (n + 1) / 2);
        for r in 0..n {
            for col in 0..=r {
                residual.push(T::lit(l[(r, col)] * resid_scale));
            }
        }
        Ok(Self {
            grid,
            spec,
            projection: unit.into_iter().map(|w| T::lit(w * proj_scale)).collect(),
            residual,
        })
    }

    pub fn grid(&self) -> &FbmGrid<T> {
        &self.grid
    }

    pub fn spec(&self) -> &KernelSpec<T> {
        &self.spec
    }

    /// `E[B_H(t_i) | ΔW]` for every grid point.
    pub fn conditional_mean(&self, dw: &[T]) -> Result<Vec<T>> {
        check_increments(&self.grid, dw)?;
        let n = self.grid.n_steps();
        let mut out = Vec::with_capacity(n + 1);
        out.push(T::zero());
        for i in 1..=n {
            let row = &self.projection[row_offset(i)..row_offset(i) + i];
            out.push(row.iter().zip(dw).map(|(&w, &x)| w * x).sum());
        }
        Ok(out)
    }

    /// Completes `dw` with a draw of the residual, giving an exact fBm path
    /// whose covariance with `W` is that of the kernel representation.
    pub fn sample<R: Rng + ?Sized>(&self, dw: &[T], rng: &mut R) -> Result<FbmPath<T>> {
        let mut values = self.conditional_mean(dw)?;
        let n = self.grid.n_steps();
        let xi: Vec<T> = (0..n).map(|_| standard_normal(rng)).collect();
        for (i, v) in values.iter_mut().enumerate().skip(1) {
            let row = &self.residual[row_offset(i)..row_offset(i) + i];
            let r: T = row.iter().zip(&xi).map(|(&l, &z)| l * z).sum();
            *v = *v + r;
        }
        Ok(FbmPath::from_parts(self.grid, self.spec.hurst(), values))
    }
}
