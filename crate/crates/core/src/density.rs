//! Law of the `Δ`-lag log return as a lognormal mixture of Gaussians.
//!
//! Given `σ`, `r(Δ) ~ N((μ − σ²/2)Δ, σ²Δ)`; `σ` is lognormal with log-mean
//! `β` and log-sd `kδ^{H−1}`, held fixed over the lag. Writing
//! `log σ = β + kδ^{H−1}√2 x` turns the mixing integral into a Gauss–Hermite
//! sum, and every quantity that is closed-form given `σ` (density, CDF,
//! partial expectations, moments) is averaged over the nodes.

use std::f64::consts::PI;

use crate::error::{domain, Result};
use crate::model::ModelParams;
use crate::scalar::Scalar;
use crate::special::{gauss_hermite, normal_cdf, normal_pdf};

pub const DEFAULT_QUAD_ORDER: usize = 64;
pub const MIN_QUAD_ORDER: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReturnDensitySpec<T> {
    params: ModelParams<T>,
    lag: T,
    quad_order: usize,
}

impl<T: Scalar> ReturnDensitySpec<T> {
    pub fn new(params: ModelParams<T>, lag: T) -> Result<Self> {
        Self::with_quad_order(params, lag, DEFAULT_QUAD_ORDER)
    }

    pub fn with_quad_order(params: ModelParams<T>, lag: T, quad_order: usize) -> Result<Self> {
        check_lag(lag)?;
        if quad_order < MIN_QUAD_ORDER {
            return domain(format!(
                "quadrature order must be at least {MIN_QUAD_ORDER}, got {quad_order}"
            ));
        }
        Ok(Self {
            params,
            lag,
            quad_order,
        })
    }

    pub fn params(&self) -> &ModelParams<T> {
        &self.params
    }

    pub fn lag(&self) -> T {
        self.lag
    }

    pub fn quad_order(&self) -> usize {
        self.quad_order
    }

    /// Same parameters and order at another lag.
    pub fn at_lag(&self, lag: T) -> Result<Self> {
        Self::with_quad_order(self.params, lag, self.quad_order)
    }
}

fn check_lag<T: Scalar>(lag: T) -> Result<()> {
    if lag > T::zero() && lag.is_finite() {
        Ok(())
    } else {
        domain(format!("return lag must be positive and finite, got {lag}"))
    }
}

fn check_sigma<T: Scalar>(sigma: T) -> Result<()> {
    if sigma > T::zero() && sigma.is_finite() {
        Ok(())
    } else {
        domain(format!(
            "volatility must be positive and finite, got {sigma}"
        ))
    }
}

/// Lognormal density of `σ` at observation scale `δ`.
pub fn vol_density<T: Scalar>(sigma: T, params: &ModelParams<T>) -> Result<T> {
    check_sigma(sigma)?;
    let sd = params.log_sd();
    if sd == T::zero() {
        return domain("volatility law is degenerate (k = 0) and has no density");
    }
    let z = (sigma.ln() - params.vol_mean_log()) / sd;
    Ok(normal_pdf(z) / (sigma * sd))
}

/// Gaussian density of `r(Δ)` given `σ`.
pub fn conditional_density<T: Scalar>(
    r: T,
    sigma: T,
    lag: T,
    params: &ModelParams<T>,
) -> Result<T> {
    check_sigma(sigma)?;
    check_lag(lag)?;
    let law = GaussianLaw::conditional(sigma, lag, params.drift());
    Ok(law.density(r))
}

/// Distribution of a log return, as needed by the risk measures.
pub trait ReturnLaw<T: Scalar> {
    /// `P(r ≤ q)`.
    fn cdf(&self, q: T) -> T;

    /// `E[e^r ; r ≤ q]`.
    fn partial_exp(&self, q: T) -> T;
}

/// A single Gaussian return law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianLaw<T> {
    pub mean: T,
    pub sd: T,
}

impl<T: Scalar> GaussianLaw<T> {
    /// `N((μ − σ²/2)Δ, σ²Δ)`.
    pub fn conditional(sigma: T, lag: T, drift: T) -> Self {
        Self {
            mean: (drift - T::lit(0.5) * sigma * sigma) * lag,
            sd: sigma * lag.sqrt(),
        }
    }

    pub fn density(&self, r: T) -> T {
        normal_pdf((r - self.mean) / self.sd) / self.sd
    }

    /// `mean + sd·z_p`.
    pub fn quantile(&self, p: T) -> T {
        self.mean + self.sd * crate::special::normal_quantile(p)
    }
}

impl<T: Scalar> ReturnLaw<T> for GaussianLaw<T> {
    fn cdf(&self, q: T) -> T {
        normal_cdf((q - self.mean) / self.sd)
    }

    fn partial_exp(&self, q: T) -> T {
        let v = self.sd * self.sd;
        (self.mean + T::lit(0.5) * v).exp() * normal_cdf((q - self.mean - v) / self.sd)
    }
}

/// The mixture law of `r(Δ)` discretized on Gauss–Hermite nodes.
#[derive(Debug, Clone)]
pub struct MixtureLaw<T> {
    weights: Vec<T>,
    components: Vec<GaussianLaw<T>>,
    sigmas: Vec<T>,
}

impl<T: Scalar> MixtureLaw<T> {
    pub fn new(spec: &ReturnDensitySpec<T>) -> Self {
        let p = &spec.params;
        let rule = gauss_hermite(spec.quad_order);
        let scale = p.log_sd().as_f64() * std::f64::consts::SQRT_2;
        let beta = p.vol_mean_log().as_f64();
        let norm = 1.0 / PI.sqrt();
        let mut weights = Vec::with_capacity(rule.len());
        let mut components = Vec::with_capacity(rule.len());
        let mut sigmas = Vec::with_capacity(rule.len());
        for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
            let sigma = T::lit((beta + scale * x).exp());
            weights.push(T::lit(w * norm));
            sigmas.push(sigma);
            components.push(GaussianLaw::conditional(sigma, spec.lag, p.drift()));
        }
        Self {
            weights,
            components,
            sigmas,
        }
    }

    pub fn density(&self, r: T) -> T {
        self.average(|g| g.density(r))
    }

    /// `E[σ^n]` under the node discretization.
    pub fn vol_moment(&self, n: i32) -> T {
        self.weights
            .iter()
            .zip(&self.sigmas)
            .map(|(&w, &s)| w * s.powi(n))
            .sum()
    }

    pub fn mean(&self) -> T {
        self.average(|g| g.mean)
    }

    /// Central moments `(variance, third, fourth)`.
    pub fn central_moments(&self) -> (T, T, T) {
        let m = self.mean();
        let (three, six) = (T::lit(3.0), T::lit(6.0));
        let mut acc = (T::zero(), T::zero(), T::zero());
        for (&w, g) in self.weights.iter().zip(&self.components) {
            // moments of N(d, v) about 0, with d the offset from the mixture mean
            let d = g.mean - m;
            let v = g.sd * g.sd;
            acc.0 = acc.0 + w * (d * d + v);
            acc.1 = acc.1 + w * (d * d * d + three * d * v);
            acc.2 = acc.2 + w * (d.powi(4) + six * d * d * v + three * v * v);
        }
        acc
    }

    pub fn variance(&self) -> T {
        self.central_moments().0
    }

    pub fn excess_kurtosis(&self) -> T {
        let (v, _, m4) = self.central_moments();
        m4 / (v * v) - T::lit(3.0)
    }

    fn average(&self, f: impl Fn(&GaussianLaw<T>) -> T) -> T {
        self.weights
            .iter()
            .zip(&self.components)
            .map(|(&w, g)| w * f(g))
            .sum()
    }
}

impl<T: Scalar> ReturnLaw<T> for MixtureLaw<T> {
    fn cdf(&self, q: T) -> T {
        self.average(|g| g.cdf(q))
    }

    fn partial_exp(&self, q: T) -> T {
        self.average(|g| g.partial_exp(q))
    }
}

/// Mixture density of `r(Δ)` at `r`.
pub fn mixture_density<T: Scalar>(r: T, spec: &ReturnDensitySpec<T>) -> T {
    MixtureLaw::new(spec).density(r)
}

/// `P(r(Δ) ≤ r)`.
pub fn mixture_cdf<T: Scalar>(r: T, spec: &ReturnDensitySpec<T>) -> T {
    MixtureLaw::new(spec).cdf(r)
}
