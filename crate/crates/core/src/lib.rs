//! Fractional volatility model.
//!
//! Log-volatility is driven by fractional noise, `log σ_t = β + (k/δ)(B_H(t) −
//! B_H(t−δ))`, and the price follows `dS = μS dt + σS dB`. The crate covers
//! exact fBm generation, coupled price/volatility simulation (with the price
//! noise either independent of, or identical to, the Brownian motion behind
//! `B_H`), the lognormal-mixture law of returns, VaR and expected shortfall,
//! and Monte Carlo diagnostics.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the `*64`
//! and `*32` aliases below fix the precision.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod density;
pub mod error;
pub mod fbm;
pub mod model;
pub mod risk;
pub mod rng;
pub mod scalar;
pub mod special;
pub mod stats;

pub use density::{
    conditional_density, mixture_cdf, mixture_density, vol_density, GaussianLaw, MixtureLaw,
    ReturnDensitySpec, ReturnLaw,
};
pub use error::{Error, Result};
pub use fbm::{
    fbm_covariance, fbm_via_kernel, fractional_noise, generate_fbm, kernel_cross_covariance,
    kernel_k, FbmGenerator, FbmGrid, FbmMethod, FbmPath, JointFbmSampler, KernelSpec,
    VolterraKernel,
};
pub use model::{
    girsanov_weight, second_weight, simulate_market, volatility_path, CouplingMode, MarketPath,
    MarketSimulator, ModelParams,
};
pub use risk::{
    es_fraction, expected_shortfall, lognormal_baseline, risk_report, var_fraction, var_level,
    BaselineVol, RiskQuery, RiskReport, RiskRow,
};
pub use scalar::Scalar;
pub use stats::{
    excess_kurtosis, leverage, leverage_ensemble, martingale_check, Estimate, LeverageCurve,
    MartingaleCheckResult, WeightKind,
};

pub type FbmGrid64 = FbmGrid<f64>;
pub type FbmPath64 = FbmPath<f64>;
pub type KernelSpec64 = KernelSpec<f64>;
pub type ModelParams64 = ModelParams<f64>;
pub type MarketPath64 = MarketPath<f64>;
pub type MarketSimulator64 = MarketSimulator<f64>;
pub type ReturnDensitySpec64 = ReturnDensitySpec<f64>;
pub type MixtureLaw64 = MixtureLaw<f64>;
pub type RiskQuery64 = RiskQuery<f64>;
pub type RiskReport64 = RiskReport<f64>;

pub type FbmGrid32 = FbmGrid<f32>;
pub type FbmPath32 = FbmPath<f32>;
pub type KernelSpec32 = KernelSpec<f32>;
pub type ModelParams32 = ModelParams<f32>;
pub type MarketPath32 = MarketPath<f32>;
pub type MarketSimulator32 = MarketSimulator<f32>;
pub type ReturnDensitySpec32 = ReturnDensitySpec<f32>;
pub type MixtureLaw32 = MixtureLaw<f32>;
pub type RiskQuery32 = RiskQuery<f32>;
pub type RiskReport32 = RiskReport<f32>;
