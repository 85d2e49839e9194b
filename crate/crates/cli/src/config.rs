//! `key = value` configuration with layered overrides.
//!
//! Layers are applied in order: command defaults, config file, `--set`
//! overrides, `--seed`. `beta` and `theta` are alternatives; setting one in
//! a later layer drops the other from earlier layers, and setting both in
//! the same layer is an error.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use fracvol::{BaselineVol, CouplingMode, FbmGrid, ModelParams, WeightKind};

pub const KEYS: &[&str] = &[
    "hurst",
    "k",
    "beta",
    "theta",
    "delta",
    "mu",
    "r",
    "s0",
    "seed",
    "n_paths",
    "n_steps",
    "dt",
    "quad_order",
    "pstar",
    "lags",
    "mode",
    "baseline",
    "weight",
    "taus",
    "lag",
    "r_min",
    "r_max",
    "r_points",
];

#[derive(Debug, Clone, Default)]
pub struct Layer(BTreeMap<String, String>);

impl Layer {
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut layer = Layer::default();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("{origin}:{}: expected key = value, got '{raw}'", no + 1))?;
            layer
                .insert(k.trim(), v.trim())
                .with_context(|| format!("{origin}:{}", no + 1))?;
        }
        Ok(layer)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn from_pairs<S: AsRef<str>>(pairs: &[S]) -> Result<Self> {
        let mut layer = Layer::default();
        for p in pairs {
            let p = p.as_ref();
            let (k, v) = p
                .split_once('=')
                .ok_or_else(|| anyhow!("override '{p}' is not key=value"))?;
            layer.insert(k.trim(), v.trim())?;
        }
        Ok(layer)
    }

    pub fn insert(&mut self, key: &str, value: &str) -> Result<()> {
        let key = match key {
            "H" | "h" => "hurst",
            "S0" => "s0",
            other => other,
        };
        if !KEYS.contains(&key) {
            bail!("unknown config key '{key}'");
        }
        if self.0.insert(key.to_string(), value.to_string()).is_some() {
            bail!("config key '{key}' given twice");
        }
        if self.0.contains_key("beta") && self.0.contains_key("theta") {
            bail!("beta and theta are alternatives; give only one");
        }
        Ok(())
    }

    fn apply(&self, onto: &mut BTreeMap<String, String>) {
        for (k, v) in &self.0 {
            match k.as_str() {
                "beta" => drop(onto.remove("theta")),
                "theta" => drop(onto.remove("beta")),
                _ => {}
            }
            onto.insert(k.clone(), v.clone());
        }
    }
}

/// Merged key/value view with typed getters.
#[derive(Debug, Clone)]
pub struct Resolved {
    values: BTreeMap<String, String>,
}

impl Resolved {
    pub fn merge(layers: &[&Layer]) -> Self {
        let mut values = BTreeMap::new();
        for l in layers {
            l.apply(&mut values);
        }
        Self { values }
    }

    fn raw(&self, key: &str) -> Result<&str> {
        self.values
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| anyhow!("missing config key '{key}'"))
    }

    pub fn has(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        let s = self.raw(key)?;
        let x: f64 = s
            .parse()
            .map_err(|_| anyhow!("{key} = '{s}' is not a number"))?;
        if !x.is_finite() {
            bail!("{key} must be finite, got {s}");
        }
        Ok(x)
    }

    pub fn usize(&self, key: &str) -> Result<usize> {
        let s = self.raw(key)?;
        s.parse()
            .map_err(|_| anyhow!("{key} = '{s}' is not a non-negative integer"))
    }

    pub fn u64(&self, key: &str) -> Result<u64> {
        let s = self.raw(key)?;
        s.parse()
            .map_err(|_| anyhow!("{key} = '{s}' is not a non-negative integer"))
    }

    pub fn str(&self, key: &str) -> Result<&str> {
        self.raw(key)
    }

    pub fn params(&self) -> Result<ModelParams<f64>> {
        let (h, k, delta) = (self.f64("hurst")?, self.f64("k")?, self.f64("delta")?);
        let base = match (self.has("beta"), self.has("theta")) {
            (true, false) => ModelParams::from_beta(h, k, self.f64("beta")?, delta)?,
            (false, true) => ModelParams::from_theta(h, k, self.f64("theta")?, delta)?,
            _ => bail!("give exactly one of beta and theta"),
        };
        Ok(base
            .with_drift(self.f64("mu")?)?
            .with_riskfree(self.f64("r")?)?
            .with_spot(self.f64("s0")?)?)
    }

    pub fn grid(&self) -> Result<FbmGrid<f64>> {
        Ok(FbmGrid::new(self.usize("n_steps")?, self.f64("dt")?)?)
    }

    pub fn mode(&self) -> Result<CouplingMode> {
        Ok(self.str("mode")?.parse()?)
    }

    pub fn baseline(&self) -> Result<BaselineVol> {
        Ok(self.str("baseline")?.parse()?)
    }

    /// Modes named by `mode`, which may also be `both`.
    pub fn modes(&self) -> Result<Vec<CouplingMode>> {
        match self.str("mode")? {
            "both" => Ok(vec![CouplingMode::Independent, CouplingMode::Identified]),
            s => Ok(vec![s.parse()?]),
        }
    }

    /// Weights named by `weight`, which may also be `all`.
    pub fn weights(&self) -> Result<Option<WeightKind>> {
        match self.str("weight")? {
            "all" => Ok(None),
            s => Ok(Some(s.parse()?)),
        }
    }

    pub fn lags(&self) -> Result<Vec<f64>> {
        let out = parse_list(self.str("lags")?, |s| s.parse::<f64>().ok())?;
        if out.is_empty() {
            bail!("lags is empty");
        }
        Ok(out)
    }

    pub fn taus(&self) -> Result<Vec<i64>> {
        let out = parse_list(self.str("taus")?, |s| s.parse::<i64>().ok())?;
        if out.is_empty() {
            bail!("taus is empty");
        }
        Ok(out)
    }

    /// `# fracvol <command> key=value ...` over the given keys, skipping
    /// absent ones.
    pub fn header(&self, command: &str, keys: &[&str]) -> String {
        let mut s = format!("# fracvol {command}");
        for k in keys {
            if let Some(v) = self.values.get(*k) {
                let _ = write!(s, " {k}={v}");
            }
        }
        s
    }
}

/// Comma-separated items, each a single value or an integer range `a..b`
/// (inclusive).
fn parse_list<T: From<i32>>(text: &str, one: impl Fn(&str) -> Option<T>) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if let Some((a, b)) = item.split_once("..") {
            let a: i32 = a
                .trim()
                .parse()
                .map_err(|_| anyhow!("bad range start in '{item}'"))?;
            let b: i32 = b
                .trim()
                .parse()
                .map_err(|_| anyhow!("bad range end in '{item}'"))?;
            if b < a {
                bail!("empty range '{item}'");
            }
            out.extend((a..=b).map(T::from));
        } else {
            out.push(one(item).ok_or_else(|| anyhow!("bad list item '{item}'"))?);
        }
    }
    Ok(out)
}
