//! Fractional Brownian motion: grids, exact generation, fractional noise and
//! the Volterra (kernel) representation driven by a standard Brownian motion.

mod circulant;
mod kernel;
mod volterra;

pub use circulant::{generate_fbm, FbmGenerator, FbmMethod};
pub use kernel::{kernel_cross_covariance, kernel_k, KernelSpec};
pub use volterra::{fbm_via_kernel, JointFbmSampler, VolterraKernel};

use crate::error::{domain, Result};
use crate::scalar::Scalar;

/// Uniform time grid `t_i = i * dt`, `i = 0..=n_steps`. Times are in days.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FbmGrid<T> {
    n_steps: usize,
    dt: T,
}

impl<T: Scalar> FbmGrid<T> {
    pub fn new(n_steps: usize, dt: T) -> Result<Self> {
        if n_steps == 0 {
            return domain("grid needs at least one step");
        }
        if !(dt > T::zero()) || !dt.is_finite() {
            return domain(format!("grid step must be positive and finite, got {dt}"));
        }
        Ok(Self { n_steps, dt })
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn horizon(&self) -> T {
        self.dt * T::from_usize_lossy(self.n_steps)
    }

    pub fn time(&self, i: usize) -> T {
        self.dt * T::from_usize_lossy(i)
    }

    /// Number of grid points, `n_steps + 1`.
    pub fn len(&self) -> usize {
        self.n_steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of steps spanning `span`, which must be a positive integer
    /// multiple of `dt` (relative tolerance 1e-9).
    pub fn steps_for(&self, span: T) -> Result<usize> {
        if !(span > T::zero()) {
            return domain(format!("lag must be positive, got {span}"));
        }
        let ratio = (span / self.dt).as_f64();
        let steps = ratio.round();
        if steps < 1.0 || (ratio - steps).abs() > 1e-9 * ratio.max(1.0) {
            return domain(format!(
                "lag {span} is not an integer multiple of dt = {}",
                self.dt
            ));
        }
        Ok(steps as usize)
    }
}

/// A sampled fBm trajectory `B_H(t_i)` on a grid, starting at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct FbmPath<T> {
    grid: FbmGrid<T>,
    hurst: T,
    values: Vec<T>,
}

impl<T: Scalar> FbmPath<T> {
    pub fn new(grid: FbmGrid<T>, hurst: T, values: Vec<T>) -> Result<Self> {
        check_hurst(hurst)?;
        if values.len() != grid.len() {
            return domain(format!(
                "path has {} values for a grid of {} points",
                values.len(),
                grid.len()
            ));
        }
        if values[0] != T::zero() {
            return domain("fBm path must start at zero");
        }
        Ok(Self {
            grid,
            hurst,
            values,
        })
    }

    pub(crate) fn from_parts(grid: FbmGrid<T>, hurst: T, values: Vec<T>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self {
            grid,
            hurst,
            values,
        }
    }

    pub fn grid(&self) -> &FbmGrid<T> {
        &self.grid
    }

    pub fn hurst(&self) -> T {
        self.hurst
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }
}

pub(crate) fn check_hurst<T: Scalar>(hurst: T) -> Result<()> {
    if hurst > T::zero() && hurst < T::one() {
        Ok(())
    } else {
        domain(format!("Hurst exponent must lie in (0, 1), got {hurst}"))
    }
}

/// Covariance of standard fBm, `½(t^{2H} + s^{2H} − |t−s|^{2H})`.
pub fn fbm_covariance<T: Scalar>(s: T, t: T, hurst: T) -> Result<T> {
    check_hurst(hurst)?;
    if s < T::zero() || t < T::zero() {
        return domain(format!("times must be nonnegative, got ({s}, {t})"));
    }
    let two_h = hurst + hurst;
    let pow = |x: T| {
        if x == T::zero() {
            T::zero()
        } else {
            x.powf(two_h)
        }
    };
    Ok(T::lit(0.5) * (pow(t) + pow(s) - pow((t - s).abs())))
}

/// Increments `B_H(t_i) − B_H(t_i − δ)` for every grid point with `t_i ≥ δ`.
///
/// `delta` must be an integer multiple of the grid step.
pub fn fractional_noise<T: Scalar>(path: &FbmPath<T>, delta: T) -> Result<Vec<T>> {
    let lag = path.grid.steps_for(delta)?;
    if lag > path.grid.n_steps() {
        return domain(format!(
            "lag {delta} exceeds the path horizon {}",
            path.grid.horizon()
        ));
    }
    let v = &path.values;
    Ok((lag..v.len()).map(|i| v[i] - v[i - lag]).collect())
}
