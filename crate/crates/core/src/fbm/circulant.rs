//! Exact fBm sampling.
//!
//! The default engine embeds the fractional-Gaussian-noise covariance in a
//! circulant matrix of size `2n` and samples through one FFT per path
//! (Davies–Harte / Wood–Chan). When the embedding has negative eigenvalues
//! the generator falls back to the Durbin–Levinson (Hosking) recursion,
//! which is exact for any valid autocovariance but costs `O(n^2)` per path.

use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::{check_hurst, FbmGrid, FbmPath};
use crate::error::{Error, Result};
use crate::rng::{standard_normal, stream_rng};
use crate::scalar::Scalar;

/// Eigenvalues below `-EIGEN_TOL * max_eigenvalue` reject the embedding;
/// anything between that and zero is rounding noise and is clamped.
const EIGEN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FbmMethod {
    /// Circulant embedding, falling back to Hosking if the embedding fails.
    #[default]
    Auto,
    Circulant,
    Hosking,
}

#[derive(Clone)]
enum Engine<T: Scalar> {
    Circulant {
        /// `sqrt(λ_j / m)` for `j = 0..=n`.
        scale: Vec<T>,
        fft: Arc<dyn Fft<T>>,
    },
    Hosking {
        /// Row `i` holds the prediction coefficients `φ_{i,1..=i}`.
        coeffs: Vec<Vec<T>>,
        /// Conditional standard deviations.
        sd: Vec<T>,
    },
}

/// Reusable sampler for fBm on a fixed grid and Hurst exponent.
#[derive(Clone)]
pub struct FbmGenerator<T: Scalar> {
    grid: FbmGrid<T>,
    hurst: T,
    step_scale: T,
    engine: Engine<T>,
}

impl<T: Scalar> std::fmt::Debug for FbmGenerator<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FbmGenerator")
            .field("grid", &self.grid)
            .field("hurst", &self.hurst)
            .field("method", &self.method_used())
            .finish()
    }
}

/// Autocovariance of unit-step fractional Gaussian noise.
fn fgn_autocov(k: usize, hurst: f64) -> f64 {
    let k = k as f64;
    let h2 = 2.0 * hurst;
    0.5 * ((k + 1.0).powf(h2) - 2.0 * k.powf(h2) + (k - 1.0).abs().powf(h2))
}

fn circulant_eigenvalues(n: usize, hurst: f64) -> Vec<f64> {
    let m = 2 * n;
    let mut row: Vec<Complex<f64>> = Vec::with_capacity(m);
    for j in 0..=n {
        row.push(Complex::new(fgn_autocov(j, hurst), 0.0));
    }
    for j in (1..n).rev() {
        row.push(Complex::new(fgn_autocov(j, hurst), 0.0));
    }
    let fft = FftPlanner::<f64>::new().plan_fft_forward(m);
    fft.process(&mut row);
    row.into_iter().map(|c| c.re).collect()
}

fn hosking_tables(n: usize, hurst: f64) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let gamma: Vec<f64> = (0..n).map(|k| fgn_autocov(k, hurst)).collect();
    let mut coeffs: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut var = Vec::with_capacity(n);
    coeffs.push(Vec::new());
    var.push(gamma[0]);
    for i in 1..n {
        let prev = &coeffs[i - 1];
        let mut acc = gamma[i];
        for (j, p) in prev.iter().enumerate() {
            acc -= p * gamma[i - 1 - j];
        }
        let phi_ii = acc / var[i - 1];
        let mut row = Vec::with_capacity(i);
        for j in 0..i - 1 {
            row.push(prev[j] - phi_ii * prev[i - 2 - j]);
        }
        row.push(phi_ii);
        let v = var[i - 1] * (1.0 - phi_ii * phi_ii);
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::Internal(format!(
                "Hosking recursion lost positive definiteness at step {i} (variance {v})"
            )));
        }
        coeffs.push(row);
        var.push(v);
    }
    Ok((coeffs, var.into_iter().map(f64::sqrt).collect()))
}

impl<T: Scalar> FbmGenerator<T> {
    pub fn new(grid: FbmGrid<T>, hurst: T, method: FbmMethod) -> Result<Self> {
        check_hurst(hurst)?;
        let n = grid.n_steps();
        let h = hurst.as_f64();
        let step_scale = grid.dt().powf(hurst);

        let circulant = || -> Option<Engine<T>> {
            let eig = circulant_eigenvalues(n, h);
            let max = eig.iter().cloned().fold(0.0, f64::max);
            if eig.iter().any(|&l| l < -EIGEN_TOL * max) {
                return None;
            }
            let m = (2 * n) as f64;
            let scale = eig[..=n]
                .iter()
                .map(|&l| T::lit((l.max(0.0) / m).sqrt()))
                .collect();
            let fft = FftPlanner::<T>::new().plan_fft_forward(2 * n);
            Some(Engine::Circulant { scale, fft })
        };
        let hosking = || -> Result<Engine<T>> {
            let (c, sd) = hosking_tables(n, h)?;
            Ok(Engine::Hosking {
                coeffs: c
                    .into_iter()
                    .map(|r| r.into_iter().map(T::lit).collect())
                    .collect(),
                sd: sd.into_iter().map(T::lit).collect(),
            })
        };

        let engine = match method {
            FbmMethod::Circulant => circulant().ok_or_else(|| {
                Error::Internal(format!(
                    "circulant embedding is not nonnegative definite for n={n}, H={h}"
                ))
            })?,
            FbmMethod::Hosking => hosking()?,
            FbmMethod::Auto => match circulant() {
                Some(e) => e,
                None => hosking().map_err(|e| {
                    Error::Internal(format!(
                        "circulant embedding failed and fallback failed: {e}"
                    ))
                })?,
            },
        };
        Ok(Self {
            grid,
            hurst,
            step_scale,
            engine,
        })
    }

    pub fn grid(&self) -> &FbmGrid<T> {
        &self.grid
    }

    pub fn hurst(&self) -> T {
        self.hurst
    }

    /// The engine actually in use (`Circulant` or `Hosking`, never `Auto`).
    pub fn method_used(&self) -> FbmMethod {
        match self.engine {
            Engine::Circulant { .. } => FbmMethod::Circulant,
            Engine::Hosking { .. } => FbmMethod::Hosking,
        }
    }

    /// Draws unit-step fractional Gaussian noise of length `n_steps`.
    fn sample_fgn<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<T> {
        let n = self.grid.n_steps();
        match &self.engine {
            Engine::Circulant { scale, fft } => {
                let m = 2 * n;
                let mut buf = vec![Complex::new(T::zero(), T::zero()); m];
                buf[0] = Complex::new(scale[0] * standard_normal(rng), T::zero());
                buf[n] = Complex::new(scale[n] * standard_normal(rng), T::zero());
                let inv_sqrt2 = T::lit(std::f64::consts::FRAC_1_SQRT_2);
                for j in 1..n {
                    let s = scale[j] * inv_sqrt2;
                    let re: T = standard_normal(rng);
                    let im: T = standard_normal(rng);
                    buf[j] = Complex::new(s * re, s * im);
                    buf[m - j] = Complex::new(s * re, -(s * im));
                }
                fft.process(&mut buf);
                buf[..n].iter().map(|c| c.re).collect()
            }
            Engine::Hosking { coeffs, sd } => {
                let mut x: Vec<T> = Vec::with_capacity(n);
                for i in 0..n {
                    let mean: T = coeffs[i]
                        .iter()
                        .enumerate()
                        .map(|(j, &phi)| phi * x[i - 1 - j])
                        .sum();
                    let z: T = standard_normal(rng);
                    x.push(mean + sd[i] * z);
                }
                x
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> FbmPath<T> {
        let noise = self.sample_fgn(rng);
        let mut values = Vec::with_capacity(noise.len() + 1);
        let mut acc = T::zero();
        values.push(acc);
        for x in noise {
            acc = acc + x * self.step_scale;
            values.push(acc);
        }
        FbmPath::from_parts(self.grid, self.hurst, values)
    }

    /// Draws `n_paths` independent paths; path `p` uses RNG stream `p`.
    pub fn sample_batch(&self, seed: u64, n_paths: usize) -> Vec<FbmPath<T>> {
        (0..n_paths)
            .into_par_iter()
            .map(|p| self.sample(&mut stream_rng(seed, p as u64)))
            .collect()
    }
}

/// Draws one exact fBm path on `grid`, deterministically from `seed`.
pub fn generate_fbm<T: Scalar>(grid: FbmGrid<T>, hurst: T, seed: u64) -> Result<FbmPath<T>> {
    let generator = FbmGenerator::new(grid, hurst, FbmMethod::Auto)?;
    Ok(generator.sample(&mut stream_rng(seed, 0)))
}
