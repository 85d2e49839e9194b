use rand::Rng;
use rayon::prelude::*;

use super::{CouplingMode, ModelParams};
use crate::error::{domain, Result};
use crate::fbm::{fractional_noise, FbmGrid, FbmPath, JointFbmSampler, KernelSpec};
use crate::rng::{standard_normal, stream_rng};
use crate::scalar::Scalar;

/// One simulated trajectory of `(σ_t, S_t, B_t, W_t, Z_t)` on the output grid.
///
/// Time 0 is the first instant at which `σ` is defined, i.e. `δ` after the
/// start of the underlying fBm. `B` and `W` are relabeled to start at 0.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketPath<T> {
    grid: FbmGrid<T>,
    mode: CouplingMode,
    sigma: Vec<T>,
    price: Vec<T>,
    b_path: Vec<T>,
    w_path: Vec<T>,
    discounted: Vec<T>,
}

impl<T: Scalar> MarketPath<T> {
    pub fn grid(&self) -> &FbmGrid<T> {
        &self.grid
    }

    pub fn mode(&self) -> CouplingMode {
        self.mode
    }

    pub fn sigma(&self) -> &[T] {
        &self.sigma
    }

    pub fn price(&self) -> &[T] {
        &self.price
    }

    /// Brownian motion driving the price.
    pub fn b_path(&self) -> &[T] {
        &self.b_path
    }

    /// Brownian motion synthesizing the fBm.
    pub fn w_path(&self) -> &[T] {
        &self.w_path
    }

    /// `Z_t = S_t e^{−rt}`.
    pub fn discounted(&self) -> &[T] {
        &self.discounted
    }

    pub fn len(&self) -> usize {
        self.sigma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma.is_empty()
    }

    /// Overlapping log returns `log S_{t+Δ} − log S_t`, `Δ = lag_steps · dt`.
    pub fn log_returns(&self, lag_steps: usize) -> Result<Vec<T>> {
        if lag_steps == 0 || lag_steps >= self.price.len() {
            return domain(format!(
                "return lag of {lag_steps} steps does not fit a path of {} points",
                self.price.len()
            ));
        }
        let p = &self.price;
        Ok((lag_steps..p.len())
            .map(|i| (p[i] / p[i - lag_steps]).ln())
            .collect())
    }
}

/// `σ_t = θ exp((k/δ)(B_H(t) − B_H(t−δ)) − ½ k² δ^{2H−2})` for grid points
/// `t ≥ δ`; the first `δ` of the path is burn-in.
pub fn volatility_path<T: Scalar>(fbm: &FbmPath<T>, params: &ModelParams<T>) -> Result<Vec<T>> {
    if fbm.hurst() != params.hurst() {
        return domain(format!(
            "fBm has H = {} but the model uses H = {}",
            fbm.hurst(),
            params.hurst()
        ));
    }
    if fbm.grid().horizon() < params.obs_scale() * T::lit(1.0 - 1e-12) {
        return domain(format!(
            "fBm horizon {} is shorter than δ = {}",
            fbm.grid().horizon(),
            params.obs_scale()
        ));
    }
    let noise = fractional_noise(fbm, params.obs_scale())?;
    let kd = params.vol_scale() / params.obs_scale();
    let shift = T::lit(0.5) * params.log_var();
    Ok(noise
        .into_iter()
        .map(|x| params.theta() * (kd * x - shift).exp())
        .collect())
}

/// Reusable simulator for one `(params, mode, grid)` triple.
///
/// Building it factors the joint `(W, B_H)` covariance once; each path then
/// costs `O(n²)` in the number of internal steps.
#[derive(Debug, Clone)]
pub struct MarketSimulator<T: Scalar> {
    params: ModelParams<T>,
    mode: CouplingMode,
    grid: FbmGrid<T>,
    burn_in: usize,
    sampler: JointFbmSampler<T>,
}

impl<T: Scalar> MarketSimulator<T> {
    /// `grid` is the output grid; its step must divide `δ`.
    pub fn new(params: ModelParams<T>, mode: CouplingMode, grid: FbmGrid<T>) -> Result<Self> {
        let burn_in = grid.steps_for(params.obs_scale())?;
        let inner = FbmGrid::new(grid.n_steps() + burn_in, grid.dt())?;
        let sampler = JointFbmSampler::new(inner, KernelSpec::new(params.hurst())?)?;
        Ok(Self {
            params,
            mode,
            grid,
            burn_in,
            sampler,
        })
    }

    pub fn params(&self) -> &ModelParams<T> {
        &self.params
    }

    pub fn mode(&self) -> CouplingMode {
        self.mode
    }

    pub fn grid(&self) -> &FbmGrid<T> {
        &self.grid
    }

    /// Draws one path. Random numbers are consumed in a fixed order: `W`
    /// increments, the fBm residual, then (independent mode) `B` increments.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> MarketPath<T> {
        let p = &self.params;
        let n = self.grid.n_steps();
        let lag = self.burn_in;
        let dt = self.grid.dt();
        let sqdt = dt.sqrt();

        let dw: Vec<T> = (0..n + lag)
            .map(|_| standard_normal::<T, _>(rng) * sqdt)
            .collect();
        let bh = self
            .sampler
            .sample(&dw, rng)
            .expect("increment count matches the sampler grid")
            .into_values();

        let kd = p.vol_scale() / p.obs_scale();
        let shift = T::lit(0.5) * p.log_var();
        let sigma: Vec<T> = (0..=n)
            .map(|i| p.theta() * (kd * (bh[i + lag] - bh[i]) - shift).exp())
            .collect();

        let mut w_path = Vec::with_capacity(n + 1);
        w_path.push(T::zero());
        for &x in &dw[lag..] {
            let last = *w_path.last().unwrap();
            w_path.push(last + x);
        }
        let b_path = match self.mode {
            CouplingMode::Identified => w_path.clone(),
            CouplingMode::Independent => {
                let mut b = Vec::with_capacity(n + 1);
                b.push(T::zero());
                for _ in 0..n {
                    let last = *b.last().unwrap();
                    b.push(last + standard_normal::<T, _>(rng) * sqdt);
                }
                b
            }
        };

        let half = T::lit(0.5);
        let mut log_s = p.spot().ln();
        let mut price = Vec::with_capacity(n + 1);
        let mut discounted = Vec::with_capacity(n + 1);
        price.push(p.spot());
        discounted.push(p.spot());
        for i in 0..n {
            let s = sigma[i];
            log_s = log_s + (p.drift() - half * s * s) * dt + s * (b_path[i + 1] - b_path[i]);
            let t = self.grid.time(i + 1);
            price.push(log_s.exp());
            discounted.push((log_s - p.riskfree() * t).exp());
        }

        MarketPath {
            grid: self.grid,
            mode: self.mode,
            sigma,
            price,
            b_path,
            w_path,
            discounted,
        }
    }

    /// Path drawn from stream `stream` of `seed`.
    pub fn path(&self, seed: u64, stream: u64) -> MarketPath<T> {
        self.sample(&mut stream_rng(seed, stream))
    }

    /// `n_paths` paths; path `p` uses stream `p`.
    pub fn batch(&self, seed: u64, n_paths: usize) -> Vec<MarketPath<T>> {
        self.map_paths(seed, n_paths, |path| path)
    }

    /// Applies `f` to `n_paths` paths in parallel without retaining them;
    /// output order follows the stream index.
    pub fn map_paths<U, F>(&self, seed: u64, n_paths: usize, f: F) -> Vec<U>
    where
        U: Send,
        F: Fn(MarketPath<T>) -> U + Sync + Send,
    {
        self.map_streams(seed, 0..n_paths as u64, |_, path| f(path))
    }

    /// Like [`map_paths`](Self::map_paths) over an arbitrary stream range;
    /// `f` also receives the stream index.
    pub fn map_streams<U, F>(&self, seed: u64, streams: std::ops::Range<u64>, f: F) -> Vec<U>
    where
        U: Send,
        F: Fn(u64, MarketPath<T>) -> U + Sync + Send,
    {
        streams
            .into_par_iter()
            .map(|p| f(p, self.path(seed, p)))
            .collect()
    }

    /// `log(S_T / S_0)` for each of `n_paths` independent paths.
    pub fn horizon_returns(&self, seed: u64, n_paths: usize) -> Vec<T> {
        self.map_paths(seed, n_paths, |path| {
            let s = path.price();
            (s[s.len() - 1] / s[0]).ln()
        })
    }
}

/// Simulates one market path on the output `grid` (stream 0 of `seed`).
pub fn simulate_market<T: Scalar>(
    params: &ModelParams<T>,
    mode: CouplingMode,
    grid: FbmGrid<T>,
    seed: u64,
) -> Result<MarketPath<T>> {
    Ok(MarketSimulator::new(*params, mode, grid)?.path(seed, 0))
}
