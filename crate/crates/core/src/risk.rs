//! Value at risk and expected shortfall of a position of size `S` over a lag
//! `Δ`, for the mixture return law and for a single-volatility lognormal
//! baseline.
//!
//! With `q = log(1 − Λ*/S)`, VaR solves `F(q) = P*` and
//! `E* = (S/P*) E[(1 − e^r); r ≤ q] = (S/P*)(F(q) − E[e^r; r ≤ q])`.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::density::{GaussianLaw, MixtureLaw, ReturnDensitySpec, ReturnLaw};
use crate::error::{domain, Error, Result};
use crate::scalar::Scalar;

/// Volatility of the lognormal baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BaselineVol {
    /// `σ = θ = E[σ]`.
    #[default]
    Mean,
    /// `σ = sqrt(E[σ²])`.
    Rms,
}

impl fmt::Display for BaselineVol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BaselineVol::Mean => "mean",
            BaselineVol::Rms => "rms",
        })
    }
}

impl FromStr for BaselineVol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mean" => Ok(BaselineVol::Mean),
            "rms" => Ok(BaselineVol::Rms),
            other => domain(format!(
                "unknown baseline volatility '{other}' (expected mean or rms)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiskQuery<T> {
    pstar: T,
    capital: T,
    lags: Vec<T>,
    spec: ReturnDensitySpec<T>,
    baseline: BaselineVol,
}

impl<T: Scalar> RiskQuery<T> {
    /// `spec` supplies the parameters and quadrature order; its own lag is
    /// replaced by each entry of `lags`.
    pub fn new(pstar: T, capital: T, lags: Vec<T>, spec: ReturnDensitySpec<T>) -> Result<Self> {
        check_pstar(pstar)?;
        if !(capital > T::zero() && capital.is_finite()) {
            return domain(format!(
                "capital must be positive and finite, got {capital}"
            ));
        }
        for &lag in &lags {
            spec.at_lag(lag)?;
        }
        Ok(Self {
            pstar,
            capital,
            lags,
            spec,
            baseline: BaselineVol::Mean,
        })
    }

    pub fn with_baseline(mut self, baseline: BaselineVol) -> Self {
        self.baseline = baseline;
        self
    }

    pub fn pstar(&self) -> T {
        self.pstar
    }

    pub fn capital(&self) -> T {
        self.capital
    }

    pub fn lags(&self) -> &[T] {
        &self.lags
    }

    pub fn spec(&self) -> &ReturnDensitySpec<T> {
        &self.spec
    }

    pub fn baseline(&self) -> BaselineVol {
        self.baseline
    }

    pub fn model_law(&self, lag: T) -> Result<MixtureLaw<T>> {
        Ok(MixtureLaw::new(&self.spec.at_lag(lag)?))
    }

    pub fn baseline_law(&self, lag: T) -> Result<GaussianLaw<T>> {
        let spec = self.spec.at_lag(lag)?;
        let p = spec.params();
        let sigma = match self.baseline {
            BaselineVol::Mean => p.theta(),
            BaselineVol::Rms => p.vol_moment(2).sqrt(),
        };
        Ok(GaussianLaw::conditional(sigma, lag, p.drift()))
    }
}

fn check_pstar<T: Scalar>(pstar: T) -> Result<()> {
    if pstar > T::zero() && pstar < T::one() {
        Ok(())
    } else {
        domain(format!(
            "tail probability P* must lie in (0, 1), got {pstar}"
        ))
    }
}

/// Largest acceptable `|F(q) − P*|`; `1e-10` in `f64`, looser in `f32`.
pub fn root_tolerance<T: Scalar>() -> T {
    T::lit(1e-10).max(T::lit(100.0) * T::epsilon())
}

/// Loss fraction `x = Λ*/S ∈ [0, 1)` with `F(log(1 − x)) = P*`, by bisection.
pub fn var_fraction<T: Scalar, L: ReturnLaw<T> + ?Sized>(law: &L, pstar: T) -> Result<T> {
    check_pstar(pstar)?;
    let tol = root_tolerance::<T>();
    let g = |x: T| law.cdf((T::one() - x).ln()) - pstar;
    let at_zero = g(T::zero());
    if at_zero < -tol {
        return domain(format!(
            "P* = {pstar} exceeds the probability of any loss ({}); VaR would be a gain",
            at_zero + pstar
        ));
    }
    if at_zero <= tol {
        return Ok(T::zero());
    }
    // g decreases from g(0) > 0 to -P* as x → 1
    let (mut lo, mut hi) = (T::zero(), T::one());
    let width = T::lit(1e-12).max(T::epsilon());
    while hi - lo > width {
        let mid = T::lit(0.5) * (lo + hi);
        if g(mid) > T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // polish to the last representable digit where the CDF is steep
    for _ in 0..64 {
        let mid = T::lit(0.5) * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) > T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let x = if g(lo).abs() <= g(hi).abs() { lo } else { hi };
    let residual = g(x).abs();
    if residual > tol {
        return Err(Error::Internal(format!(
            "VaR root residual {residual} exceeds {tol}; the return law has an atom near the quantile"
        )));
    }
    Ok(x)
}

/// `E*/S` given the VaR fraction `x`.
pub fn es_fraction<T: Scalar, L: ReturnLaw<T> + ?Sized>(law: &L, pstar: T, x: T) -> Result<T> {
    check_pstar(pstar)?;
    if !(x >= T::zero() && x < T::one()) {
        return domain(format!("VaR fraction must lie in [0, 1), got {x}"));
    }
    let q = (T::one() - x).ln();
    let f = law.cdf(q);
    // no tighter than the root tolerance, which dominates in f32
    let slack = (T::lit(1e-6) * pstar).max(root_tolerance());
    if (f - pstar).abs() > slack {
        return domain(format!(
            "VaR {x} is inconsistent with P* = {pstar}: tail probability at the threshold is {f}"
        ));
    }
    Ok((f - law.partial_exp(q)) / pstar)
}

/// Model VaR `Λ*` at lag `Δ`.
pub fn var_level<T: Scalar>(query: &RiskQuery<T>, lag: T) -> Result<T> {
    Ok(query.capital * var_fraction(&query.model_law(lag)?, query.pstar)?)
}

/// Model expected shortfall `E*` for the threshold `var` at lag `Δ`.
pub fn expected_shortfall<T: Scalar>(query: &RiskQuery<T>, lag: T, var: T) -> Result<T> {
    let x = var / query.capital;
    Ok(query.capital * es_fraction(&query.model_law(lag)?, query.pstar, x)?)
}

/// Closed-form `(Λ*, E*)` for the lognormal baseline.
pub fn lognormal_baseline<T: Scalar>(query: &RiskQuery<T>, lag: T) -> Result<(T, T)> {
    let law = query.baseline_law(lag)?;
    let p = query.pstar;
    let q = law.quantile(p);
    let x = -q.exp_m1();
    let es = (p - law.partial_exp(q)) / p;
    Ok((query.capital * x, query.capital * es))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskRow<T> {
    pub lag: T,
    pub var_model: T,
    pub es_model: T,
    pub var_lognormal: T,
    pub es_lognormal: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiskReport<T> {
    pub rows: Vec<RiskRow<T>>,
}

/// One row per lag of the query, computed in parallel, in query order.
pub fn risk_report<T: Scalar>(query: &RiskQuery<T>) -> Result<RiskReport<T>> {
    let rows = query
        .lags
        .par_iter()
        .map(|&lag| {
            let var_model = var_level(query, lag)?;
            let es_model = expected_shortfall(query, lag, var_model)?;
            let (var_lognormal, es_lognormal) = lognormal_baseline(query, lag)?;
            Ok(RiskRow {
                lag,
                var_model,
                es_model,
                var_lognormal,
                es_lognormal,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RiskReport { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelParams;
    use crate::special::normal_quantile;

    fn query(pstar: f64, capital: f64) -> RiskQuery<f64> {
        let spec = ReturnDensitySpec::new(ModelParams::benchmark(), 1.0).unwrap();
        RiskQuery::new(pstar, capital, (1..=30).map(f64::from).collect(), spec).unwrap()
    }

    /// Mass `p` at `r0` and the rest at `r1 > r0`.
    struct TwoPoint {
        p: f64,
        r0: f64,
        r1: f64,
    }

    impl ReturnLaw<f64> for TwoPoint {
        fn cdf(&self, q: f64) -> f64 {
            if q < self.r0 {
                0.0
            } else if q < self.r1 {
                self.p
            } else {
                1.0
            }
        }

        fn partial_exp(&self, q: f64) -> f64 {
            let mut acc = 0.0;
            if q >= self.r0 {
                acc += self.p * self.r0.exp();
            }
            if q >= self.r1 {
                acc += (1.0 - self.p) * self.r1.exp();
            }
            acc
        }
    }

    #[test]
    fn point_mass_tail_gives_es_equal_var() {
        let law = TwoPoint {
            p: 0.01,
            r0: -0.05,
            r1: 0.01,
        };
        let x = -(-0.05_f64).exp_m1();
        let es = es_fraction(&law, 0.01, x).unwrap();
        assert!((es - x).abs() < 1e-15);
    }

    #[test]
    fn median_of_driftless_gaussian_is_zero_loss() {
        let p = ModelParams::from_beta(0.83_f64, 0.0, -5.0, 1.0).unwrap();
        let theta = p.theta();
        let p = p.with_drift(0.5 * theta * theta).unwrap();
        let spec = ReturnDensitySpec::new(p, 1.0).unwrap();
        let q = RiskQuery::new(0.5, 1.0, vec![1.0], spec).unwrap();
        assert!(var_level(&q, 1.0).unwrap().abs() < 1e-12);
        assert!(lognormal_baseline(&q, 1.0).unwrap().0.abs() < 1e-15);
    }

    #[test]
    fn baseline_closed_form() {
        let q = query(0.01, 1.0);
        let theta = ModelParams::<f64>::benchmark().theta();
        let z = normal_quantile(0.01_f64);
        assert!((z + 2.326347874040841).abs() < 1e-14);
        let want = 1.0 - (-0.5 * theta * theta + theta * z).exp();
        let (var, es) = lognormal_baseline(&q, 1.0).unwrap();
        assert!((var / want - 1.0).abs() < 1e-12);
        assert!(es >= var);
    }

    #[test]
    fn report_orderings() {
        let report = risk_report(&query(0.01, 1.0)).unwrap();
        assert_eq!(report.rows.len(), 30);
        for w in report.rows.windows(2) {
            assert!(w[1].var_model > w[0].var_model);
        }
        for r in &report.rows {
            assert!(r.var_model > 0.0 && r.var_model < 1.0);
            assert!(r.es_model >= r.var_model && r.es_lognormal >= r.var_lognormal);
            assert!(r.var_model > r.var_lognormal && r.es_model > r.es_lognormal);
            let law = query(0.01, 1.0).model_law(r.lag).unwrap();
            let resid = law.cdf((1.0 - r.var_model).ln()) - 0.01;
            assert!(resid.abs() <= 1e-10, "lag {}: {resid:e}", r.lag);
        }
    }

    #[test]
    fn scale_equivariance() {
        let a = risk_report(&query(0.01, 1.0)).unwrap();
        let b = risk_report(&query(0.01, 2.0)).unwrap();
        for (x, y) in a.rows.iter().zip(&b.rows) {
            assert_eq!(2.0 * x.var_model, y.var_model);
            assert_eq!(2.0 * x.es_model, y.es_model);
            assert_eq!(2.0 * x.var_lognormal, y.var_lognormal);
            assert_eq!(2.0 * x.es_lognormal, y.es_lognormal);
        }
    }

    #[test]
    fn var_decreases_with_pstar() {
        let v: Vec<f64> = [0.001, 0.01, 0.05, 0.2]
            .iter()
            .map(|&p| var_level(&query(p, 1.0), 5.0).unwrap())
            .collect();
        assert!(v.windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn inconsistent_pair_is_rejected() {
        let q = query(0.01, 1.0);
        let var = var_level(&q, 1.0).unwrap();
        assert!(expected_shortfall(&q, 1.0, 0.5 * var).is_err());
        assert!(RiskQuery::new(1.0, 1.0, vec![1.0], *q.spec()).is_err());
        assert!(RiskQuery::new(0.01, 1.0, vec![0.0], *q.spec()).is_err());
    }

    #[test]
    fn rms_baseline_is_wider() {
        let q = query(0.01, 1.0);
        let mean = lognormal_baseline(&q, 1.0).unwrap();
        let rms = lognormal_baseline(&q.clone().with_baseline(BaselineVol::Rms), 1.0).unwrap();
        assert!(rms.0 > mean.0);
    }
}
