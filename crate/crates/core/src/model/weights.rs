//! Density processes of the equivalent martingale measures.
//!
//! On the grid, `η` is built from the left-endpoint sums
//! `Σ λ_i ΔB_i − ½ Σ λ_i² dt` with `λ_i = (r − μ)/σ_i`. Because `σ_i` is
//! known before `ΔB_i` is drawn, `η Z` is a discrete martingale exactly,
//! not just in the `dt → 0` limit.

use super::{CouplingMode, MarketPath, ModelParams};
use crate::error::{domain, Result};
use crate::scalar::Scalar;

/// `η_t = exp(∫ (r−μ)/σ dB − ½ ∫ (r−μ)²/σ² ds)`, with `η_0 = 1`.
pub fn girsanov_weight<T: Scalar>(path: &MarketPath<T>, params: &ModelParams<T>) -> Vec<T> {
    let excess = params.riskfree() - params.drift();
    let dt = path.grid().dt();
    let half = T::lit(0.5);
    let b = path.b_path();
    let mut log_eta = T::zero();
    let mut out = Vec::with_capacity(path.len());
    out.push(T::one());
    for (i, &s) in path.sigma()[..path.len() - 1].iter().enumerate() {
        let lambda = excess / s;
        log_eta = log_eta + lambda * (b[i + 1] - b[i]) - half * lambda * lambda * dt;
        out.push(log_eta.exp());
    }
    out
}

/// `η′_t = exp(W_t − t/2)`, the density of a second martingale measure.
///
/// Needs a `W` independent of the price noise, so identified-mode paths are
/// rejected.
pub fn second_weight<T: Scalar>(path: &MarketPath<T>) -> Result<Vec<T>> {
    if path.mode() == CouplingMode::Identified {
        return domain("the second weight needs W independent of B (independent coupling mode)");
    }
    let half = T::lit(0.5);
    let grid = path.grid();
    Ok(path
        .w_path()
        .iter()
        .enumerate()
        .map(|(i, &w)| (w - half * grid.time(i)).exp())
        .collect())
}
