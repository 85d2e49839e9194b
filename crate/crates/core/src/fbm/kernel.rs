//! Volterra kernel of fBm with respect to a standard Brownian motion,
//!
//! ```text
//! K(t,s) = C_H s^{1/2-H} ∫_s^t (u-s)^{H-3/2} u^{H-1/2} du,   0 < s < t,
//! ```
//!
//! so that `B_H(t) = ∫_0^t K(t,s) dW_s` for `H ∈ (1/2, 1)`.
//!
//! With `a = H - 1/2`, substituting `u = s + v^{1/a}` removes the
//! `(u-s)^{a-1}` endpoint singularity: the inner integral becomes
//! `(1/a) ∫_0^{(t-s)^a} (s + v^{1/a})^a dv`, which is integrated with
//! Gauss–Legendre panels whose breakpoints halve `u - s` toward the lower
//! endpoint (the integrand changes character where `u - s ~ s`).

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use statrs::function::beta::{beta, beta_reg};

use crate::error::{domain, Result};
use crate::scalar::Scalar;
use crate::special::gauss_legendre;

const PANEL_ORDER: usize = 16;
const MIN_PANELS: i64 = 10;
const MAX_PANELS: i64 = 60;
const NORM_LEVELS: i32 = 40;

/// Hurst exponent and the normalization constant `C_H` of the kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec<T> {
    hurst: T,
    normalization: T,
}

impl<T: Scalar> KernelSpec<T> {
    /// Builds the kernel for `hurst ∈ (1/2, 1)`, fixing `C_H` so that the
    /// synthesized process has `Var(B_H(1)) = 1`.
    pub fn new(hurst: T) -> Result<Self> {
        let h = hurst.as_f64();
        if !(h > 0.5 && h < 1.0) {
            return domain(format!(
                "kernel representation needs H in (1/2, 1), got {h}"
            ));
        }
        Ok(Self {
            hurst,
            normalization: T::lit(normalization(h)),
        })
    }

    pub fn hurst(&self) -> T {
        self.hurst
    }

    pub fn normalization(&self) -> T {
        self.normalization
    }

    pub(crate) fn exponent(&self) -> f64 {
        self.hurst.as_f64() - 0.5
    }
}

/// `∫_s^t (u-s)^{a-1} u^a du` for `0 < s < t`.
pub(crate) fn inner_integral(t: f64, s: f64, a: f64) -> f64 {
    let len = t - s;
    let rule = gauss_legendre(PANEL_ORDER);
    // clamp before the cast: len/s is infinite for subnormal s
    let panels = ((len / s).log2().ceil() + MIN_PANELS as f64)
        .clamp(MIN_PANELS as f64, MAX_PANELS as f64) as i64;
    let inv_a = 1.0 / a;
    let g = |w: f64| (s + len * w.powf(inv_a)).powf(a);
    let mut acc = 0.0;
    let mut hi = 1.0;
    for j in 1..=panels {
        let lo = (-(j as f64) * a * std::f64::consts::LN_2).exp();
        acc += rule.integrate(lo, hi, g);
        hi = lo;
    }
    acc += rule.integrate(0.0, hi, g);
    len.powf(a) * acc * inv_a
}

/// Kernel without the normalization constant.
pub(crate) fn kernel_unit(t: f64, s: f64, a: f64) -> f64 {
    s.powf(-a) * inner_integral(t, s, a)
}

/// `1 / sqrt(∫_0^1 K_unit(1,s)^2 ds)`, memoized per Hurst exponent.
fn normalization(hurst: f64) -> f64 {
    static CACHE: OnceLock<Mutex<HashMap<u64, f64>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(&c) = cache
        .lock()
        .expect("kernel cache poisoned")
        .get(&hurst.to_bits())
    {
        return c;
    }
    let c = 1.0 / unit_variance(hurst - 0.5).sqrt();
    cache
        .lock()
        .expect("kernel cache poisoned")
        .insert(hurst.to_bits(), c);
    c
}

/// `∫_0^1 K_unit(1,s)^2 ds`, after `s = y^p` with `p = 1/(1-2a)` cancels the
/// `s^{-2a}` singularity; panels are graded geometrically toward both ends.
fn unit_variance(a: f64) -> f64 {
    first_cell_energy(1.0, a, NORM_LEVELS)
}

/// Breakpoints on `[0, 1]` halving toward 0 and, optionally, toward 1.
pub(crate) fn graded_breaks(levels: i32, grade_upper: bool) -> Vec<f64> {
    let mut breaks = vec![0.0];
    for j in (2..=levels + 1).rev() {
        breaks.push(2f64.powi(-j));
    }
    breaks.push(0.5);
    if grade_upper {
        for j in 2..=levels + 1 {
            breaks.push(1.0 - 2f64.powi(-j));
        }
    }
    breaks.push(1.0);
    breaks
}

/// `∫_0^1 K_unit(t,s)^2 ds` for `t ≥ 1`, using the same `s = y^p` change of
/// variables as the normalization integral.
pub(crate) fn first_cell_energy(t: f64, a: f64, levels: i32) -> f64 {
    let p = 1.0 / (1.0 - 2.0 * a);
    let rule = gauss_legendre(PANEL_ORDER);
    let f = |y: f64| {
        let s = y.powf(p);
        if s >= t {
            return 0.0;
        }
        // y^p underflows long before the integrand vanishes (p is large
        // near H = 1); use the s → 0 limit ∫_0^t u^{2a-1} du there
        let inner = if s > 0.0 {
            inner_integral(t, s, a)
        } else {
            t.powf(2.0 * a) / (2.0 * a)
        };
        p * inner * inner
    };
    graded_breaks(levels, t <= 1.0)
        .windows(2)
        .map(|w| rule.integrate(w[0], w[1], f))
        .sum()
}

/// Evaluates `K(t, s)` for `0 < s < t`.
pub fn kernel_k<T: Scalar>(t: T, s: T, spec: &KernelSpec<T>) -> Result<T> {
    let (t, s) = (t.as_f64(), s.as_f64());
    if !(s > 0.0) || !(s < t) || !t.is_finite() {
        return domain(format!("kernel needs 0 < s < t, got s={s}, t={t}"));
    }
    let a = spec.exponent();
    Ok(T::lit(spec.normalization.as_f64() * kernel_unit(t, s, a)))
}

/// `Cov(B_H(t), W(s)) = ∫_0^{min(s,t)} K(t,u) du`, in closed form.
///
/// Swapping the order of integration turns the double integral into
/// incomplete beta functions; with `a = H - 1/2` and `z = s/t`, for `s ≤ t`:
///
/// ```text
/// C_H/(1+a) · [ t^{1+a} B(1-a,a) I_z(1-a,a)
///             + s^{1+a} ( z^{-2a}(1-z)^a / (2a) + ½ B(1-2a,a) (1 - I_z(1-2a,a)) ) ]
/// ```
pub fn kernel_cross_covariance<T: Scalar>(t: T, s: T, spec: &KernelSpec<T>) -> Result<T> {
    let (t, s) = (t.as_f64(), s.as_f64());
    if !(t > 0.0) || s < 0.0 || !t.is_finite() || !s.is_finite() {
        return domain(format!(
            "cross covariance needs t > 0 and s >= 0, got t={t}, s={s}"
        ));
    }
    Ok(T::lit(
        spec.normalization.as_f64() * unit_cross_covariance(t, s.min(t), spec.exponent()),
    ))
}

/// Unnormalized `∫_0^s K_unit(t,u) du` for `0 ≤ s ≤ t`.
pub(crate) fn unit_cross_covariance(t: f64, s: f64, a: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    let z = (s / t).min(1.0);
    let first = t.powf(1.0 + a) * beta(1.0 - a, a) * beta_reg(1.0 - a, a, z);
    let edge = if z < 1.0 {
        z.powf(-2.0 * a) * (1.0 - z).powf(a) / (2.0 * a)
    } else {
        0.0
    };
    let tail = 0.5 * beta(1.0 - 2.0 * a, a) * (1.0 - beta_reg(1.0 - 2.0 * a, a, z));
    (first + s.powf(1.0 + a) * (edge + tail)) / (1.0 + a)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn closed_form_normalization(h: f64) -> f64 {
        (h * (2.0 * h - 1.0) / beta(2.0 - 2.0 * h, h - 0.5)).sqrt()
    }

    #[test]
    fn normalization_matches_literature_constant() {
        for h in [0.55, 0.6, 0.7, 0.83, 0.9, 0.95, 0.98, 0.99] {
            let spec = KernelSpec::new(h).unwrap();
            let want = closed_form_normalization(h);
            let rel = (spec.normalization() / want - 1.0).abs();
            assert!(
                rel < 1e-8,
                "H={h}: {} vs {want} (rel {rel:e})",
                spec.normalization()
            );
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(KernelSpec::new(0.5).is_err());
        assert!(KernelSpec::new(1.0).is_err());
        let spec = KernelSpec::new(0.7).unwrap();
        assert!(kernel_k(1.0, 1.0, &spec).is_err());
        assert!(kernel_k(1.0, 0.0, &spec).is_err());
        assert!(kernel_k(1.0, 2.0, &spec).is_err());
        assert!(kernel_cross_covariance(0.0, 0.5, &spec).is_err());
    }

    #[test]
    fn vanishes_at_the_diagonal() {
        let spec = KernelSpec::new(0.83).unwrap();
        let near = kernel_k(2.0, 2.0 - 1e-12, &spec).unwrap();
        assert!(near > 0.0 && near < 1e-3, "{near}");
        let a = kernel_k(2.0, 1.9, &spec).unwrap();
        let b = kernel_k(2.0, 1.99, &spec).unwrap();
        assert!(b < a);
    }

    #[test]
    fn cross_covariance_diagonal_closed_form() {
        // Cov(B_H(t), W(t)) = C_H B(1-a,a) t^{1+a}/(1+a)
        let h = 0.83;
        let a = h - 0.5;
        let spec = KernelSpec::new(h).unwrap();
        let want = spec.normalization() * beta(1.0 - a, a) * 3f64.powf(1.0 + a) / (1.0 + a);
        let got = kernel_cross_covariance(3.0, 3.0, &spec).unwrap();
        assert!((got / want - 1.0).abs() < 1e-13);
        // saturates beyond t
        assert_eq!(kernel_cross_covariance(3.0, 5.0, &spec).unwrap(), got);
        assert_eq!(kernel_cross_covariance(3.0, 0.0, &spec).unwrap(), 0.0);
    }
}
