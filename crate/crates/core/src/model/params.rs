use std::fmt;
use std::str::FromStr;

use crate::error::{domain, Error, Result};
use crate::scalar::Scalar;

/// Constants of the fractional volatility model. Times are in days.
///
/// Log-volatility is `log σ_t = β + (k/δ)(B_H(t) − B_H(t−δ))`, so `σ_t` is
/// lognormal with log-mean `β`, log-sd `k δ^{H−1}` and mean
/// `θ = exp(β + ½ k² δ^{2H−2})`. Exactly one of `β`, `θ` is supplied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams<T> {
    hurst: T,
    vol_scale: T,
    vol_mean_log: T,
    obs_scale: T,
    drift: T,
    riskfree: T,
    spot: T,
    theta: T,
}

fn finite<T: Scalar>(name: &str, x: T) -> Result<T> {
    if x.is_finite() {
        Ok(x)
    } else {
        domain(format!("{name} must be finite, got {x}"))
    }
}

fn positive<T: Scalar>(name: &str, x: T) -> Result<T> {
    if x > T::zero() && x.is_finite() {
        Ok(x)
    } else {
        domain(format!("{name} must be positive and finite, got {x}"))
    }
}

fn nonnegative<T: Scalar>(name: &str, x: T) -> Result<T> {
    if x >= T::zero() && x.is_finite() {
        Ok(x)
    } else {
        domain(format!("{name} must be nonnegative and finite, got {x}"))
    }
}

impl<T: Scalar> ModelParams<T> {
    fn build(hurst: T, vol_scale: T, obs_scale: T, vol_mean_log: T) -> Result<Self> {
        if !(hurst > T::lit(0.5) && hurst < T::one()) {
            return domain(format!("model needs H in (1/2, 1), got {hurst}"));
        }
        nonnegative("vol scale k", vol_scale)?;
        positive("observation scale δ", obs_scale)?;
        finite("β", vol_mean_log)?;
        let mut p = Self {
            hurst,
            vol_scale,
            vol_mean_log,
            obs_scale,
            drift: T::zero(),
            riskfree: T::zero(),
            spot: T::one(),
            theta: T::zero(),
        };
        p.theta = positive("θ", (vol_mean_log + T::lit(0.5) * p.log_var()).exp())?;
        Ok(p)
    }

    /// Parameters from the log-volatility level `β`; `θ` is derived.
    pub fn from_beta(hurst: T, vol_scale: T, beta: T, obs_scale: T) -> Result<Self> {
        Self::build(hurst, vol_scale, obs_scale, beta)
    }

    /// Parameters from the mean volatility `θ = E[σ]`; `β` is derived.
    pub fn from_theta(hurst: T, vol_scale: T, theta: T, obs_scale: T) -> Result<Self> {
        positive("θ", theta)?;
        let mut p = Self::build(hurst, vol_scale, obs_scale, T::zero())?;
        p.vol_mean_log = theta.ln() - T::lit(0.5) * p.log_var();
        p.theta = theta;
        Ok(p)
    }

    /// `H = 0.83, k = 0.59, β = −5, δ = 1`, with `μ = r = 0` and `S0 = 1`.
    pub fn benchmark() -> Self {
        Self::from_beta(T::lit(0.83), T::lit(0.59), T::lit(-5.0), T::one())
            .expect("benchmark parameters are valid")
    }

    pub fn with_drift(mut self, mu: T) -> Result<Self> {
        self.drift = finite("drift μ", mu)?;
        Ok(self)
    }

    pub fn with_riskfree(mut self, r: T) -> Result<Self> {
        self.riskfree = nonnegative("risk-free rate r", r)?;
        Ok(self)
    }

    pub fn with_spot(mut self, s0: T) -> Result<Self> {
        self.spot = positive("spot S0", s0)?;
        Ok(self)
    }

    pub fn hurst(&self) -> T {
        self.hurst
    }

    pub fn vol_scale(&self) -> T {
        self.vol_scale
    }

    /// `β`, the log-median of `σ`.
    pub fn vol_mean_log(&self) -> T {
        self.vol_mean_log
    }

    /// `δ`, the lag of the fractional noise driving `log σ`.
    pub fn obs_scale(&self) -> T {
        self.obs_scale
    }

    pub fn drift(&self) -> T {
        self.drift
    }

    pub fn riskfree(&self) -> T {
        self.riskfree
    }

    pub fn spot(&self) -> T {
        self.spot
    }

    /// `θ = E[σ_t]`.
    pub fn theta(&self) -> T {
        self.theta
    }

    /// `Var(log σ_t) = k² δ^{2H−2}`.
    pub fn log_var(&self) -> T {
        let e = self.hurst + self.hurst - T::lit(2.0);
        self.vol_scale * self.vol_scale * self.obs_scale.powf(e)
    }

    /// `k δ^{H−1}`.
    pub fn log_sd(&self) -> T {
        self.vol_scale * self.obs_scale.powf(self.hurst - T::one())
    }

    /// `E[σ^n] = exp(nβ + ½ n² k² δ^{2H−2})`.
    pub fn vol_moment(&self, n: i32) -> T {
        let n = T::lit(n as f64);
        (n * self.vol_mean_log + T::lit(0.5) * n * n * self.log_var()).exp()
    }
}

/// How the Brownian motion driving the price relates to the one that
/// synthesizes the fBm behind the volatility.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CouplingMode {
    /// `B` and `W` are independent.
    #[default]
    Independent,
    /// `B = W`: the price is driven by the same noise as the volatility.
    Identified,
}

impl fmt::Display for CouplingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CouplingMode::Independent => "independent",
            CouplingMode::Identified => "identified",
        })
    }
}

impl FromStr for CouplingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "independent" => Ok(CouplingMode::Independent),
            "identified" => Ok(CouplingMode::Identified),
            other => domain(format!(
                "unknown coupling mode '{other}' (expected independent or identified)"
            )),
        }
    }
}
