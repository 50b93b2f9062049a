//! Command-line front end for the `roughvol` binary.
//!
//! Every subcommand reads its parameters from flags and, optionally, from a
//! flat TOML file given with `--config` whose keys are the flag names. Flags
//! win over the file. Each run writes `manifest.toml` into the output
//! directory with every effective parameter, so
//! `roughvol <cmd> --config out/manifest.toml` repeats the run.

mod commands;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::iterated::rate::RateMethod;
use crate::noise::NoiseMethod;
use crate::rde::{Control, Integrator, Preset};

pub use commands::Outcome;

#[derive(Debug, Parser)]
#[command(
    name = "roughvol",
    version,
    about = "Rough-volatility simulation, verification and calibration"
)]
#[command(args_override_self = true)]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct CommonArgs {
    /// Master seed; every random stream is derived from it.
    #[arg(long, global = true, default_value_t = 2024)]
    pub seed: u64,
    #[arg(long, global = true, default_value = "out")]
    pub out_dir: PathBuf,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true, env = "ROUGHVOL_THREADS")]
    pub threads: Option<usize>,
    /// Flat TOML file of flag values, e.g. a previous manifest.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(untagged)]
pub enum Command {
    /// Sample joint (W, X) paths and export them as CSV.
    Simulate(SimulateArgs),
    /// Exact algebra checks and the Monte Carlo identity suites.
    AlgebraVerify(AlgebraArgs),
    /// Convergence-rate studies of iterated-integral approximations.
    RateStudy(RateArgs),
    /// Wong–Zakai experiments on the shipped systems.
    Rde(RdeArgs),
    /// Monte Carlo call prices under the quadratic rough Heston model.
    Price(PriceArgs),
    /// Fit model parameters to call quotes.
    Calibrate(CalibrateArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::AlgebraVerify(_) => "algebra-verify",
            Command::RateStudy(_) => "rate-study",
            Command::Rde(_) => "rde",
            Command::Price(_) => "price",
            Command::Calibrate(_) => "calibrate",
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct SimulateArgs {
    #[arg(long, default_value = "hybrid")]
    pub method: NoiseMethod,
    #[arg(long, default_value_t = 0.1)]
    pub hurst: f64,
    #[arg(long, default_value_t = 0.8)]
    pub rho: f64,
    /// Number of time steps.
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 1.0)]
    pub t_end: f64,
    #[arg(long, default_value_t = 1)]
    pub n_paths: usize,
    /// Delay of the `X_lag` column in mesh units.
    #[arg(long, default_value_t = 1.0)]
    pub lag_fraction: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct AlgebraArgs {
    /// Hurst exponents for the exact decomposition checks.
    #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.2, 0.3])]
    pub exact_hurst: Vec<f64>,
    /// Hurst exponent of the Monte Carlo suites.
    #[arg(long, default_value_t = 0.2)]
    pub hurst: f64,
    #[arg(long, default_value_t = 0.5)]
    pub rho: f64,
    #[arg(long, default_value = "hybrid")]
    pub method: NoiseMethod,
    #[arg(long, default_value_t = 256)]
    pub n_paths: usize,
    /// Fine mesh `2^-mesh_exp`.
    #[arg(long, default_value_t = 14)]
    pub mesh_exp: u32,
    /// Interval lengths `2^-1 .. 2^-holder_levels` for the scaling fits.
    #[arg(long, default_value_t = 6)]
    pub holder_levels: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateKind {
    /// Hölder error of an iterated-integral approximant.
    Holder,
    /// Hybrid-scheme error at partition points.
    Pointwise,
    /// Mean of the mollified renormalisation term, lagged and not.
    Renormalisation,
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct RateArgs {
    #[arg(long, value_enum, default_value = "holder")]
    pub kind: RateKind,
    #[arg(long, default_value = "lead-lag")]
    pub method: RateMethod,
    #[arg(long, default_value_t = 0.3)]
    pub hurst: f64,
    #[arg(long, default_value_t = 1)]
    pub m: usize,
    /// Hölder exponent offset; defaults to `H`.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub rho: f64,
    /// Dyadic levels `l` of the meshes `2^-l`.
    #[arg(long, value_delimiter = ',', default_values_t = [4u32, 5, 6, 7, 8, 9])]
    pub levels: Vec<u32>,
    #[arg(long, default_value_t = 256)]
    pub n_paths: usize,
    /// Oracle steps per finest mesh.
    #[arg(long, default_value_t = 64)]
    pub oracle_factor: usize,
    #[arg(long, default_value_t = 1.0)]
    pub t_end: f64,
    /// Fail when the fitted slope is further than this from `H`.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Renormalisation: grid steps on `[0, 1]`.
    #[arg(long, default_value_t = 4096)]
    pub grid_n: usize,
    /// Renormalisation: grid steps per ε.
    #[arg(long, default_value_t = 64)]
    pub width: usize,
    #[arg(long, default_value_t = 0.25)]
    pub s: f64,
    #[arg(long, default_value_t = 0.5)]
    pub t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    /// One path at every ε level.
    Trajectory,
    /// Exponential-martingale and successive-refinement gaps.
    Refinement,
    /// The same without lag, with and without `γ₀ = γ₁`.
    NoLag,
    /// Correct drift against its ablations.
    Drift,
    /// `E[S_T]` against `S₀`.
    Martingale,
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct RdeArgs {
    #[arg(long, value_enum, default_value = "refinement")]
    pub experiment: Experiment,
    #[arg(long, default_value = "qheston-test")]
    pub preset: Preset,
    /// Noise meshes, coarsest first.
    #[arg(long, value_delimiter = ',', default_values_t = [1e-2, 1e-3, 1e-4])]
    pub eps: Vec<f64>,
    #[arg(long, default_value_t = 200)]
    pub n_paths: usize,
    #[arg(long, default_value_t = 0.1)]
    pub hurst: f64,
    #[arg(long, default_value_t = 0.8)]
    pub rho: f64,
    #[arg(long)]
    pub gamma0: Option<f64>,
    #[arg(long)]
    pub gamma1: Option<f64>,
    /// Path index for `trajectory`.
    #[arg(long, default_value_t = 0)]
    pub path: u64,
    /// Volatility for `bs-sanity`.
    #[arg(long, default_value_t = 0.2)]
    pub bs_sigma: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub solver: SolverArgs,
    /// Largest accepted `|E[S_T] − S₀| / SE`.
    #[arg(long, default_value_t = 3.0)]
    pub z_max: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct SolverArgs {
    /// Solver steps per noise step.
    #[arg(long, default_value_t = 10)]
    pub ratio: usize,
    #[arg(long, default_value = "rk4")]
    pub integrator: Integrator,
    #[arg(long, default_value = "piecewise-linear")]
    pub control: Control,
    #[arg(long, default_value_t = 1.2)]
    pub lag_fraction: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct ModelArgs {
    #[arg(long, default_value_t = 0.3152, allow_negative_numbers = true)]
    pub a: f64,
    #[arg(long, default_value_t = 0.3044, allow_negative_numbers = true)]
    pub b: f64,
    #[arg(long, default_value_t = 0.0316)]
    pub c: f64,
    #[arg(long, default_value_t = 0.2468, allow_negative_numbers = true)]
    pub theta: f64,
    #[arg(long, default_value_t = 0.9102)]
    pub eta: f64,
    #[arg(long, default_value_t = 0.1154, allow_negative_numbers = true)]
    pub z0: f64,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 0.1)]
    pub hurst: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct McArgs {
    /// Time steps on the longest maturity.
    #[arg(long, default_value_t = 40)]
    pub n_steps: usize,
    #[arg(long, default_value_t = 20000)]
    pub n_paths: usize,
    #[arg(long, default_value_t = 1.0)]
    pub s0: f64,
    #[arg(long, default_value_t = 10)]
    pub ratio: usize,
    #[arg(long, default_value_t = 1.2)]
    pub lag_fraction: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct PriceArgs {
    /// Price the contracts of this quote file instead of the grid below.
    #[arg(long)]
    pub quotes: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.137, 0.274, 0.548])]
    pub maturities: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.8, 0.9, 1.0, 1.1, 1.2])]
    pub strikes: Vec<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub mc: McArgs,
    /// Largest accepted forward or Black–Scholes z-score.
    #[arg(long, default_value_t = 3.0)]
    pub z_max: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct CalibrateArgs {
    #[arg(long)]
    pub quotes: PathBuf,
    /// Starting point of the simplex.
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub mc: McArgs,
    #[arg(long, default_value_t = 300)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub x_tol: f64,
    #[arg(long, default_value_t = 1e-14)]
    pub f_tol: f64,
    #[arg(long, default_value_t = 0.1)]
    pub initial_step: f64,
    #[arg(long, default_value_t = 1.0)]
    pub penalty: f64,
    /// Lower bounds on `a,b,c,theta,eta,z0`.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true,
          default_values_t = [1e-4, 1e-4, 1e-5, -3.0, 1e-3, 1e-4])]
    pub lower: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true,
          default_values_t = [5.0, 3.0, 1.0, 3.0, 5.0, 3.0])]
    pub upper: Vec<f64>,
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code: 0 on success, 1 when an invariant check failed, 2
/// on errors.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match parse(&args) {
        Ok(cli) => cli,
        Err(ParseError::Clap(e)) => {
            let _ = e.print();
            return e.exit_code();
        }
        Err(ParseError::Other(e)) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    match execute(&cli) {
        Ok(out) => {
            for line in &out.lines {
                println!("{line}");
            }
            for f in &out.failures {
                eprintln!("FAILED: {f}");
            }
            if out.failures.is_empty() {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

enum ParseError {
    Clap(clap::Error),
    Other(Error),
}

/// Parses the command line, splicing in values from `--config` ahead of the
/// explicit flags so that the flags take precedence.
fn parse(args: &[OsString]) -> std::result::Result<Cli, ParseError> {
    let first = Cli::try_parse_from(args).map_err(ParseError::Clap)?;
    let Some(path) = first.common.config.clone() else {
        return Ok(first);
    };
    let name = first.command.name();
    let tokens = config_tokens(&path, name).map_err(ParseError::Other)?;
    let pos = args
        .iter()
        .position(|a| a.to_str() == Some(name))
        .expect("subcommand token present");
    let mut spliced: Vec<OsString> = args[..=pos].to_vec();
    spliced.extend(tokens.into_iter().map(OsString::from));
    spliced.extend_from_slice(&args[pos + 1..]);
    Cli::try_parse_from(&spliced).map_err(ParseError::Clap)
}

fn config_tokens(path: &Path, command: &str) -> Result<Vec<String>> {
    let table: toml::Table = toml::from_str(&fs::read_to_string(path)?)?;
    let mut out = Vec::new();
    for (key, value) in &table {
        if key == "command" {
            match value.as_str() {
                Some(c) if c == command => continue,
                _ => {
                    return Err(Error::param(
                        "config",
                        format!("file is for command {value}, not `{command}`"),
                    ))
                }
            }
        }
        if key == "config" {
            continue;
        }
        out.push(format!("--{key}={}", flag_value(key, value)?));
    }
    Ok(out)
}

fn flag_value(key: &str, v: &toml::Value) -> Result<String> {
    use toml::Value as V;
    Ok(match v {
        V::String(s) => s.clone(),
        V::Integer(i) => i.to_string(),
        V::Float(f) => f.to_string(),
        V::Boolean(b) => b.to_string(),
        V::Array(items) => items
            .iter()
            .map(|x| flag_value(key, x))
            .collect::<Result<Vec<_>>>()?
            .join(","),
        _ => {
            return Err(Error::Toml(format!(
                "key `{key}`: nested values are not supported"
            )));
        }
    })
}

/// The flat manifest of a parsed command line.
pub fn manifest(cli: &Cli) -> Result<toml::Table> {
    let mut table = toml::Table::new();
    table.insert("command".into(), cli.command.name().into());
    let mut merge = |text: String| -> Result<()> {
        let t: toml::Table = toml::from_str(&text)?;
        table.extend(t);
        Ok(())
    };
    merge(toml::to_string(&cli.common)?)?;
    merge(toml::to_string(&cli.command)?)?;
    Ok(table)
}

/// Runs a parsed command on its own thread pool and writes the manifest.
pub fn execute(cli: &Cli) -> Result<Outcome> {
    let out_dir = &cli.common.out_dir;
    fs::create_dir_all(out_dir)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.common.threads {
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| Error::param("threads", e.to_string()))?;
    let outcome = pool.install(|| commands::dispatch(cli))?;
    fs::write(
        out_dir.join("manifest.toml"),
        toml::to_string(&manifest(cli)?)?,
    )?;
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_config_values() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.toml");
        fs::write(
            &cfg,
            "command = \"simulate\"\nhurst = 0.3\nn = 50\nseed = 9\n",
        )
        .unwrap();
        let args = [
            "roughvol",
            "--config",
            cfg.to_str().unwrap(),
            "simulate",
            "--n",
            "20",
        ];
        let cli = match parse(&args.map(OsString::from)) {
            Ok(c) => c,
            Err(_) => panic!("parse failed"),
        };
        let Command::Simulate(s) = &cli.command else {
            panic!()
        };
        assert_eq!(s.hurst, 0.3);
        assert_eq!(s.n, 20);
        assert_eq!(cli.common.seed, 9);
    }

    #[test]
    fn config_for_another_command_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.toml");
        fs::write(&cfg, "command = \"price\"\n").unwrap();
        let args = ["roughvol", "simulate", "--config", cfg.to_str().unwrap()];
        assert!(matches!(
            parse(&args.map(OsString::from)),
            Err(ParseError::Other(_))
        ));
    }

    #[test]
    fn manifest_is_flat_and_complete() {
        let cli =
            Cli::try_parse_from(["roughvol", "price", "--a", "0", "--strikes", "0.9,1.1"]).unwrap();
        let m = manifest(&cli).unwrap();
        assert_eq!(m["command"].as_str(), Some("price"));
        assert_eq!(m["a"].as_float(), Some(0.0));
        assert_eq!(m["strikes"].as_array().unwrap().len(), 2);
        assert!(
            m.contains_key("n-paths") && m.contains_key("lag-fraction") && m.contains_key("seed")
        );
        assert!(m.values().all(|v| !v.is_table()));
    }
}
