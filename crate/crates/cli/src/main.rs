//! `fracvol`: simulation, density, risk and diagnostics from the command line.
//!
//! Every command writes CSV: one `#` line holding the resolved
//! configuration, a header row, then data. Exit codes: 0 success, 1 a
//! requested check failed, 2 usage, configuration or I/O error.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;

use std::fmt;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use fracvol::{
    leverage_ensemble, martingale_check, risk_report, CouplingMode, MarketSimulator, MixtureLaw,
    ReturnDensitySpec, ReturnLaw, RiskQuery, WeightKind,
};

use config::{Layer, Resolved};

#[derive(Parser)]
#[command(
    name = "fracvol",
    version,
    about = "Fractional volatility model toolkit"
)]
struct Cli {
    /// `key = value` configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// RNG seed; overrides the config.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Output file (default: stdout).
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Per-key override, repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Price and volatility paths: path,t,sigma,price,z
    Simulate,
    /// Return density on a grid: r,density,cdf
    Density,
    /// VaR and expected shortfall per lag: lag,var_model,es_model,var_lognormal,es_lognormal
    Risk,
    /// Leverage curve of simulated daily returns: tau,leverage,normalized,stderr,z
    Leverage,
    /// Martingale checks: weight,mode,estimate,target,stderr,z,pass,dt
    Mgcheck,
}

const MODEL_KEYS: &[&str] = &["hurst", "k", "beta", "theta", "delta", "mu", "r", "s0"];

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Density => "density",
            Command::Risk => "risk",
            Command::Leverage => "leverage",
            Command::Mgcheck => "mgcheck",
        }
    }

    fn defaults(self) -> Layer {
        // a positive rate makes the Girsanov weight nontrivial
        let (r, mode) = match self {
            Command::Mgcheck => ("r=0.01", "mode=both"),
            _ => ("r=0", "mode=independent"),
        };
        let mut pairs = vec![
            "hurst=0.83",
            "k=0.59",
            "beta=-5",
            "delta=1",
            "mu=0",
            r,
            "s0=1",
            "seed=1",
            "quad_order=64",
            mode,
        ];
        pairs.extend(match self {
            Command::Simulate => &["n_paths=1", "n_steps=100", "dt=1"][..],
            Command::Density => &["lag=1", "r_points=4001"][..],
            Command::Risk => &["pstar=0.01", "lags=1..30", "baseline=mean"][..],
            Command::Leverage => &["n_paths=1000", "n_steps=1000", "dt=1", "taus=-5..-1,1..5"][..],
            Command::Mgcheck => &["n_paths=100000", "n_steps=4", "dt=0.03125", "weight=all"][..],
        });
        Layer::from_pairs(&pairs).expect("built-in defaults are valid")
    }

    fn keys(self) -> Vec<&'static str> {
        let mut keys = MODEL_KEYS.to_vec();
        keys.extend(match self {
            Command::Simulate => &["mode", "seed", "n_paths", "n_steps", "dt"][..],
            Command::Density => &["quad_order", "lag", "r_min", "r_max", "r_points"][..],
            Command::Risk => &["quad_order", "pstar", "lags", "baseline"][..],
            Command::Leverage => &["mode", "seed", "n_paths", "n_steps", "dt", "taus"][..],
            Command::Mgcheck => &["mode", "weight", "seed", "n_paths", "n_steps", "dt"][..],
        });
        keys
    }
}

/// Shortest round-trip decimal, switching to exponent form outside
/// `[1e-4, 1e15)` so tiny leverage values stay readable.
struct Num(f64);

impl fmt::Display for Num {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let a = self.0.abs();
        if a == 0.0 || !a.is_finite() || (1e-4..1e15).contains(&a) {
            write!(f, "{}", self.0)
        } else {
            write!(f, "{:e}", self.0)
        }
    }
}

fn resolve(cli: &Cli) -> Result<Resolved> {
    let defaults = cli.command.defaults();
    let file = match &cli.config {
        Some(p) => Layer::read(p)?,
        None => Layer::default(),
    };
    let over = Layer::from_pairs(&cli.set)?;
    let seed = match cli.seed {
        Some(s) => Layer::from_pairs(&[format!("seed={s}")])?,
        None => Layer::default(),
    };
    Ok(Resolved::merge(&[&defaults, &file, &over, &seed]))
}

fn simulate(cfg: &Resolved, out: &mut dyn Write) -> Result<bool> {
    let params = cfg.params()?;
    let grid = cfg.grid()?;
    let sim = MarketSimulator::new(params, cfg.mode()?, grid)?;
    writeln!(out, "path,t,sigma,price,z")?;
    let (seed, n) = (cfg.u64("seed")?, cfg.usize("n_paths")?);
    // format in parallel, write in path order
    let chunk = 256;
    for start in (0..n).step_by(chunk) {
        let end = (start + chunk).min(n) as u64;
        let blocks = sim.map_streams(seed, start as u64..end, |i, path| {
            let mut s = String::new();
            for j in 0..path.len() {
                s.push_str(&format!(
                    "{i},{},{},{},{}\n",
                    Num(path.grid().time(j)),
                    Num(path.sigma()[j]),
                    Num(path.price()[j]),
                    Num(path.discounted()[j])
                ));
            }
            s
        });
        for b in blocks {
            out.write_all(b.as_bytes())?;
        }
    }
    Ok(true)
}

fn density(cfg: &Resolved, out: &mut dyn Write) -> Result<bool> {
    let spec = ReturnDensitySpec::with_quad_order(
        cfg.params()?,
        cfg.f64("lag")?,
        cfg.usize("quad_order")?,
    )?;
    let law = MixtureLaw::new(&spec);
    let sd = law.variance().sqrt();
    let lo = if cfg.has("r_min") {
        cfg.f64("r_min")?
    } else {
        law.mean() - 40.0 * sd
    };
    let hi = if cfg.has("r_max") {
        cfg.f64("r_max")?
    } else {
        law.mean() + 40.0 * sd
    };
    let n = cfg.usize("r_points")?;
    if n < 2 || !(hi > lo) {
        bail!("density grid needs r_points >= 2 and r_max > r_min");
    }
    writeln!(out, "r,density,cdf")?;
    let step = (hi - lo) / (n - 1) as f64;
    for i in 0..n {
        let r = if i == n - 1 { hi } else { lo + i as f64 * step };
        writeln!(
            out,
            "{},{},{}",
            Num(r),
            Num(law.density(r)),
            Num(law.cdf(r))
        )?;
    }
    Ok(true)
}

fn risk(cfg: &Resolved, out: &mut dyn Write) -> Result<bool> {
    let params = cfg.params()?;
    let spec = ReturnDensitySpec::with_quad_order(params, 1.0, cfg.usize("quad_order")?)?;
    let query = RiskQuery::new(cfg.f64("pstar")?, params.spot(), cfg.lags()?, spec)?
        .with_baseline(cfg.baseline()?);
    let report = risk_report(&query)?;
    writeln!(out, "lag,var_model,es_model,var_lognormal,es_lognormal")?;
    for r in &report.rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            Num(r.lag),
            Num(r.var_model),
            Num(r.es_model),
            Num(r.var_lognormal),
            Num(r.es_lognormal)
        )?;
    }
    Ok(true)
}

fn leverage(cfg: &Resolved, out: &mut dyn Write) -> Result<bool> {
    let sim = MarketSimulator::new(cfg.params()?, cfg.mode()?, cfg.grid()?)?;
    let series = sim.map_paths(cfg.u64("seed")?, cfg.usize("n_paths")?, |p| {
        p.log_returns(1)
    });
    let series = series.into_iter().collect::<fracvol::Result<Vec<_>>>()?;
    let curve = leverage_ensemble(&series, &cfg.taus()?)?;
    writeln!(out, "tau,leverage,normalized,stderr,z")?;
    let z = curve.z_scores();
    for (i, zi) in z.iter().enumerate() {
        writeln!(
            out,
            "{},{},{},{},{}",
            curve.taus[i],
            Num(curve.values[i]),
            Num(curve.normalized[i]),
            Num(curve.stderr[i]),
            Num(*zi)
        )?;
    }
    Ok(true)
}

fn mgcheck(cfg: &Resolved, out: &mut dyn Write) -> Result<bool> {
    let params = cfg.params()?;
    let grid = cfg.grid()?;
    let (seed, n) = (cfg.u64("seed")?, cfg.usize("n_paths")?);
    let mut runs = Vec::new();
    for mode in cfg.modes()? {
        match cfg.weights()? {
            Some(w) => runs.push((mode, w)),
            None => {
                runs.push((mode, WeightKind::Eta));
                // η′ needs a price noise independent of the volatility driver
                if mode == CouplingMode::Independent {
                    runs.push((mode, WeightKind::EtaTimesEtaPrime));
                }
            }
        }
    }
    writeln!(out, "weight,mode,estimate,target,stderr,z,pass,dt")?;
    let mut all = true;
    for (mode, weight) in runs {
        let r = martingale_check(&params, mode, weight, n, grid, seed)?;
        all &= r.pass;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.weight,
            r.mode,
            Num(r.estimate),
            Num(r.target),
            Num(r.stderr),
            Num(r.z_score),
            r.pass,
            Num(r.dt)
        )?;
    }
    Ok(all)
}

fn run(cli: &Cli) -> Result<bool> {
    let cfg = resolve(cli)?;
    let mut sink: Box<dyn Write> = match &cli.out {
        Some(p) => Box::new(File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(io::stdout().lock()),
    };
    let mut out = BufWriter::new(&mut sink);
    writeln!(
        out,
        "{}",
        cfg.header(cli.command.name(), &cli.command.keys())
    )?;
    let ok = match cli.command {
        Command::Simulate => simulate(&cfg, &mut out)?,
        Command::Density => density(&cfg, &mut out)?,
        Command::Risk => risk(&cfg, &mut out)?,
        Command::Leverage => leverage(&cfg, &mut out)?,
        Command::Mgcheck => mgcheck(&cfg, &mut out)?,
    };
    out.flush()?;
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("fracvol: a check failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("fracvol: {e:#}");
            ExitCode::from(2)
        }
    }
}
