//! Estimators and Monte Carlo diagnostics over simulated returns and paths.
//!
//! Accumulation is done in `f64` regardless of the scalar type.

use std::fmt;
use std::str::FromStr;

use crate::error::{domain, Error, Result};
use crate::fbm::FbmGrid;
use crate::model::{girsanov_weight, second_weight, CouplingMode, MarketSimulator, ModelParams};
use crate::scalar::Scalar;

/// Number of batches behind every batch-means standard error. Well above
/// 20 so that `z` is close to normal rather than Student-t.
pub const LEVERAGE_BATCHES: usize = 50;

/// `|z|` below which a check passes.
pub const PASS_Z: f64 = 3.0;

/// A point estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

impl Estimate {
    /// `(value − target) / stderr`.
    pub fn z_score(&self, target: f64) -> f64 {
        z_score(self.value - target, self.stderr)
    }
}

fn z_score(diff: f64, se: f64) -> f64 {
    if se > 0.0 {
        diff / se
    } else if diff == 0.0 {
        0.0
    } else {
        diff.signum() * f64::INFINITY
    }
}

/// Sample mean and its standard error.
pub fn mean_with_se<T: Scalar>(xs: &[T]) -> Estimate {
    let n = xs.len() as f64;
    let mean = xs.iter().map(|x| x.as_f64()).sum::<f64>() / n;
    let ss: f64 = xs.iter().map(|x| (x.as_f64() - mean).powi(2)).sum();
    Estimate {
        value: mean,
        stderr: (ss / (n - 1.0) / n).sqrt(),
    }
}

/// `L(τ) = ⟨r(t+τ)² r(t)⟩ − ⟨r(t+τ)²⟩⟨r(t)⟩` over a set of lags.
#[derive(Debug, Clone, PartialEq)]
pub struct LeverageCurve {
    pub taus: Vec<i64>,
    pub values: Vec<f64>,
    /// `L(τ) / ⟨r²⟩²`.
    pub normalized: Vec<f64>,
    pub stderr: Vec<f64>,
    /// `⟨r²⟩` over all observations.
    pub second_moment: f64,
}

impl LeverageCurve {
    pub fn z_scores(&self) -> Vec<f64> {
        self.values
            .iter()
            .zip(&self.stderr)
            .map(|(&v, &s)| z_score(v, s))
            .collect()
    }

    pub fn normalized_stderr(&self) -> Vec<f64> {
        let d = self.second_moment * self.second_moment;
        self.stderr.iter().map(|s| s / d).collect()
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct CrossSums {
    n: f64,
    cross: f64,
    lead_sq: f64,
    base: f64,
}

impl CrossSums {
    fn add(&mut self, base: f64, lead: f64) {
        let sq = lead * lead;
        self.n += 1.0;
        self.cross += sq * base;
        self.lead_sq += sq;
        self.base += base;
    }

    fn merge(&mut self, o: &CrossSums) {
        self.n += o.n;
        self.cross += o.cross;
        self.lead_sq += o.lead_sq;
        self.base += o.base;
    }

    fn estimate(&self) -> f64 {
        self.cross / self.n - (self.lead_sq / self.n) * (self.base / self.n)
    }
}

/// Leverage estimator on a single return series.
///
/// Standard errors come from [`LEVERAGE_BATCHES`] contiguous batches; a
/// pair `(t, t+τ)` belongs to the batch holding `min(t, t+τ)`.
pub fn leverage<T: Scalar>(returns: &[T], taus: &[i64]) -> Result<LeverageCurve> {
    leverage_ensemble(&[returns], taus)
}

/// Leverage estimator pooled over independent series. Pairs never straddle
/// two series. With at least [`LEVERAGE_BATCHES`] series, batches are
/// groups of whole series; otherwise each series is cut into contiguous
/// blocks.
pub fn leverage_ensemble<T: Scalar, S: AsRef<[T]>>(
    series: &[S],
    taus: &[i64],
) -> Result<LeverageCurve> {
    if taus.is_empty() {
        return domain("leverage needs at least one lag");
    }
    if series.is_empty() {
        return domain("leverage needs at least one return series");
    }
    let max_tau = taus
        .iter()
        .map(|t| t.unsigned_abs() as usize)
        .max()
        .unwrap_or(0);
    let min_len = series.iter().map(|s| s.as_ref().len()).min().unwrap_or(0);
    let b = LEVERAGE_BATCHES;
    if min_len < 10 * max_tau.max(1) {
        return domain(format!(
            "series of length {min_len} is too short for |τ| up to {max_tau} (need 10·max|τ|)"
        ));
    }
    let by_series = series.len() >= b;
    if !by_series && min_len < 2 * b {
        return domain(format!(
            "series of length {min_len} cannot form {b} batches"
        ));
    }

    let mut sq_sum = 0.0;
    let mut count = 0.0;
    for s in series {
        for x in s.as_ref() {
            let x = x.as_f64();
            sq_sum += x * x;
            count += 1.0;
        }
    }
    let second_moment = sq_sum / count;

    let n_series = series.len();
    let mut values = Vec::with_capacity(taus.len());
    let mut stderr = Vec::with_capacity(taus.len());
    for &tau in taus {
        let mut batches = vec![CrossSums::default(); b];
        for (k, s) in series.iter().enumerate() {
            let r = s.as_ref();
            let len = r.len();
            let shift = tau.unsigned_abs() as usize;
            for t in 0..len.saturating_sub(shift) {
                // base index i, lead index i + τ
                let (i, j) = if tau >= 0 {
                    (t, t + shift)
                } else {
                    (t + shift, t)
                };
                let batch = if by_series {
                    k * b / n_series
                } else {
                    t * b / len
                };
                batches[batch].add(r[i].as_f64(), r[j].as_f64());
            }
        }
        let mut total = CrossSums::default();
        for x in &batches {
            total.merge(x);
        }
        let est = total.estimate();
        let per: Vec<f64> = batches.iter().map(CrossSums::estimate).collect();
        let mean = per.iter().sum::<f64>() / b as f64;
        let var = per.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (b as f64 - 1.0);
        values.push(est);
        stderr.push((var / b as f64).sqrt());
    }
    let d = second_moment * second_moment;
    let normalized = values.iter().map(|v| v / d).collect();
    Ok(LeverageCurve {
        taus: taus.to_vec(),
        values,
        normalized,
        stderr,
        second_moment,
    })
}

/// Smallest sample accepted by [`excess_kurtosis`].
pub const MIN_KURTOSIS_SAMPLE: usize = 10_000;

/// `m4/m2² − 3` with a delete-one jackknife standard error.
pub fn excess_kurtosis<T: Scalar>(returns: &[T]) -> Result<Estimate> {
    let n = returns.len();
    if n < MIN_KURTOSIS_SAMPLE {
        return domain(format!(
            "kurtosis needs at least {MIN_KURTOSIS_SAMPLE} returns, got {n}"
        ));
    }
    let nf = n as f64;
    let mean = returns.iter().map(|x| x.as_f64()).sum::<f64>() / nf;
    // power sums of the centered data
    let mut s = [0.0f64; 5];
    for x in returns {
        let d = x.as_f64() - mean;
        let d2 = d * d;
        s[1] += d;
        s[2] += d2;
        s[3] += d2 * d;
        s[4] += d2 * d2;
    }
    if !(s[2] > 0.0) {
        return domain("kurtosis of a constant series is undefined");
    }
    let kurt = |n: f64, s1: f64, s2: f64, s3: f64, s4: f64| {
        let m = s1 / n;
        let m2 = s2 / n - m * m;
        let m4 = s4 / n - 4.0 * m * s3 / n + 6.0 * m * m * s2 / n - 3.0 * m.powi(4);
        m4 / (m2 * m2) - 3.0
    };
    let full = kurt(nf, s[1], s[2], s[3], s[4]);
    let mut jk_sum = 0.0;
    let mut jk_sq = 0.0;
    for x in returns {
        let d = x.as_f64() - mean;
        let d2 = d * d;
        let k = kurt(nf - 1.0, s[1] - d, s[2] - d2, s[3] - d2 * d, s[4] - d2 * d2);
        // deviations from the full estimate keep the sums well conditioned
        jk_sum += k - full;
        jk_sq += (k - full) * (k - full);
    }
    let jk_mean = jk_sum / nf;
    let var = (nf - 1.0) / nf * (jk_sq - nf * jk_mean * jk_mean).max(0.0);
    Ok(Estimate {
        value: full,
        stderr: var.sqrt(),
    })
}

/// Density process used to reweight `Z_T`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WeightKind {
    /// `η_T`.
    #[default]
    Eta,
    /// `η_T η′_T`; independent mode only.
    EtaTimesEtaPrime,
}

impl fmt::Display for WeightKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WeightKind::Eta => "eta",
            WeightKind::EtaTimesEtaPrime => "eta_times_eta_prime",
        })
    }
}

impl FromStr for WeightKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "eta" => Ok(WeightKind::Eta),
            "eta_times_eta_prime" | "eta_eta_prime" => Ok(WeightKind::EtaTimesEtaPrime),
            other => domain(format!(
                "unknown weight '{other}' (expected eta or eta_times_eta_prime)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MartingaleCheckResult {
    pub weight: WeightKind,
    pub mode: CouplingMode,
    /// Sample mean of `weight · Z_T`.
    pub estimate: f64,
    /// `Z_0`.
    pub target: f64,
    pub stderr: f64,
    pub z_score: f64,
    pub pass: bool,
    /// Whether the reported run is the refined (halved `dt`) one.
    pub refined: bool,
    /// Step of the reported run.
    pub dt: f64,
    pub n_paths: usize,
}

/// Checks `E[w_T Z_T] = Z_0` by Monte Carlo over `n_paths` paths.
///
/// On failure the grid is refined once (`dt` halved, horizon kept) and the
/// refined result is reported.
pub fn martingale_check<T: Scalar>(
    params: &ModelParams<T>,
    mode: CouplingMode,
    weight: WeightKind,
    n_paths: usize,
    grid: FbmGrid<T>,
    seed: u64,
) -> Result<MartingaleCheckResult> {
    if weight == WeightKind::EtaTimesEtaPrime && mode == CouplingMode::Identified {
        return domain("the η·η′ weight needs independent coupling mode");
    }
    if n_paths < 2 {
        return domain(format!(
            "martingale check needs at least 2 paths, got {n_paths}"
        ));
    }
    let first = run_check(params, mode, weight, n_paths, grid, seed, false)?;
    if first.pass {
        return Ok(first);
    }
    let fine = FbmGrid::new(grid.n_steps() * 2, grid.dt() * T::lit(0.5))?;
    run_check(params, mode, weight, n_paths, fine, seed, true)
}

fn run_check<T: Scalar>(
    params: &ModelParams<T>,
    mode: CouplingMode,
    weight: WeightKind,
    n_paths: usize,
    grid: FbmGrid<T>,
    seed: u64,
    refined: bool,
) -> Result<MartingaleCheckResult> {
    let sim = MarketSimulator::new(*params, mode, grid)?;
    let samples = sim.map_paths(seed, n_paths, |path| -> Result<f64> {
        let last = path.len() - 1;
        let mut w = girsanov_weight(&path, params)[last].as_f64();
        if weight == WeightKind::EtaTimesEtaPrime {
            w *= second_weight(&path)?[last].as_f64();
        }
        Ok(w * path.discounted()[last].as_f64())
    });
    let samples = samples.into_iter().collect::<Result<Vec<f64>>>()?;
    let est = mean_with_se(&samples);
    let target = params.spot().as_f64();
    let z = est.z_score(target);
    Ok(MartingaleCheckResult {
        weight,
        mode,
        estimate: est.value,
        target,
        stderr: est.stderr,
        z_score: z,
        pass: z.abs() < PASS_Z,
        refined,
        dt: grid.dt().as_f64(),
        n_paths,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{standard_normal, stream_rng};

    fn gaussian(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = stream_rng(seed, 0);
        (0..n).map(|_| standard_normal(&mut rng)).collect()
    }

    #[test]
    fn kurtosis_matches_direct_formula() {
        let x = gaussian(20_000, 1);
        let n = x.len() as f64;
        let m = x.iter().sum::<f64>() / n;
        let m2 = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n;
        let m4 = x.iter().map(|v| (v - m).powi(4)).sum::<f64>() / n;
        let k = excess_kurtosis(&x).unwrap();
        assert!((k.value - (m4 / (m2 * m2) - 3.0)).abs() < 1e-10);
        // large-sample SE of Gaussian kurtosis is sqrt(24/n)
        assert!(
            (k.stderr / (24.0 / n).sqrt() - 1.0).abs() < 0.15,
            "{}",
            k.stderr
        );
    }

    #[test]
    fn jackknife_matches_brute_force() {
        let x: Vec<f64> = gaussian(MIN_KURTOSIS_SAMPLE, 4)
            .iter()
            .map(|v| v * v * v)
            .collect();
        let kurt = |v: &[f64]| {
            let n = v.len() as f64;
            let m = v.iter().sum::<f64>() / n;
            let m2 = v.iter().map(|a| (a - m).powi(2)).sum::<f64>() / n;
            let m4 = v.iter().map(|a| (a - m).powi(4)).sum::<f64>() / n;
            m4 / (m2 * m2) - 3.0
        };
        let n = x.len();
        let loo: Vec<f64> = (0..n)
            .map(|i| {
                let v: Vec<f64> = x[..i].iter().chain(&x[i + 1..]).copied().collect();
                kurt(&v)
            })
            .collect();
        let mean = loo.iter().sum::<f64>() / n as f64;
        let se = ((n as f64 - 1.0) / n as f64
            * loo.iter().map(|k| (k - mean).powi(2)).sum::<f64>())
        .sqrt();
        let k = excess_kurtosis(&x).unwrap();
        assert!((k.value / kurt(&x) - 1.0).abs() < 1e-10);
        assert!((k.stderr / se - 1.0).abs() < 1e-6, "{} vs {se}", k.stderr);
    }

    #[test]
    fn kurtosis_errors() {
        assert!(excess_kurtosis(&vec![1.0_f64; 20_000]).is_err());
        assert!(excess_kurtosis(&gaussian(100, 2)).is_err());
    }

    #[test]
    fn leverage_on_iid_is_null() {
        let x = gaussian(200_000, 3);
        let taus: Vec<i64> = (-5..=5).collect();
        let c = leverage(&x, &taus).unwrap();
        for (t, z) in taus.iter().zip(c.z_scores()) {
            assert!(z.abs() < 4.0, "τ={t}: z={z}");
        }
        assert!(c.stderr.iter().all(|&s| s > 0.0));
    }

    #[test]
    fn leverage_detects_planted_effect() {
        // r_t = s_t ε_t with s_t² = 1 + 0.5·ε_{t−1}: squares follow past returns
        let e = gaussian(200_001, 5);
        let r: Vec<f64> = (1..e.len())
            .map(|t| (1.0 + 0.5 * e[t - 1]).abs().sqrt() * e[t])
            .collect();
        let c = leverage(&r, &[-1, 1]).unwrap();
        let z = c.z_scores();
        assert!(z[0].abs() < 4.0);
        assert!(z[1] > 10.0);
    }

    #[test]
    fn leverage_errors() {
        let x = gaussian(100, 1);
        assert!(leverage(&x, &[20]).is_err());
        assert!(leverage(&x, &[]).is_err());
        assert!(leverage(&x[..30], &[1]).is_err());
    }

    #[test]
    fn ensemble_pairs_stay_within_series() {
        // two series; a cross-boundary pair would pick up the planted jump
        let a = vec![1.0_f64; 100];
        let mut b = vec![-1.0_f64; 100];
        b[0] = 100.0;
        let c = leverage_ensemble(&[a, b], &[-1]).unwrap();
        // τ = −1 pairs (t, t−1): base r_t, lead r_{t−1}; only inside each series
        let pooled: Vec<(f64, f64)> = (1..100)
            .map(|_| (1.0, 1.0))
            .chain((1..100).map(|t| (-1.0, if t == 1 { 100.0 } else { -1.0 })))
            .collect();
        let n = pooled.len() as f64;
        let cross = pooled.iter().map(|(b, l)| l * l * b).sum::<f64>() / n;
        let lead = pooled.iter().map(|(_, l)| l * l).sum::<f64>() / n;
        let base = pooled.iter().map(|(b, _)| b).sum::<f64>() / n;
        assert!((c.values[0] - (cross - lead * base)).abs() < 1e-9);
    }

    #[test]
    fn martingale_check_trivial_and_rejects_bad_mode() {
        let p = ModelParams::<f64>::benchmark()
            .with_riskfree(0.01)
            .unwrap()
            .with_drift(0.01)
            .unwrap();
        let grid = FbmGrid::new(4, 0.25).unwrap();
        let r = martingale_check(
            &p,
            CouplingMode::Independent,
            WeightKind::Eta,
            4000,
            grid,
            1,
        )
        .unwrap();
        assert!(r.pass, "{r:?}");
        assert!(!r.refined);
        assert!(martingale_check(
            &p,
            CouplingMode::Identified,
            WeightKind::EtaTimesEtaPrime,
            10,
            grid,
            1
        )
        .is_err());
    }

    #[test]
    fn weight_kind_round_trip() {
        for w in [WeightKind::Eta, WeightKind::EtaTimesEtaPrime] {
            assert_eq!(w.to_string().parse::<WeightKind>().unwrap(), w);
        }
    }
}
