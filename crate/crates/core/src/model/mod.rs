//! The coupled price/volatility model
//!
//! ```text
//! dS_t = μ S_t dt + σ_t S_t dB_t,
//! log σ_t = β + (k/δ)(B_H(t) − B_H(t−δ)),
//! ```
//!
//! simulated with a log-Euler step, together with the density processes of
//! its equivalent martingale measures.

mod market;
mod params;
mod weights;

pub use market::{simulate_market, volatility_path, MarketPath, MarketSimulator};
pub use params::{CouplingMode, ModelParams};
pub use weights::{girsanov_weight, second_weight};
