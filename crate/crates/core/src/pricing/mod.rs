//! Monte Carlo call prices under the quadratic rough Heston model and
//! least-squares calibration to quotes.
//!
//! Paths of `(W, X)` depend only on the seed, the grid and `H`, so they are
//! generated once and reused for every parameter point (common random
//! numbers).

mod calibrate;
mod quotes;

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

pub use calibrate::{
    calibrate, calibrate_with, load_result, save_result, write_trace_csv, Bounds,
    CalibrationDiagnostics, CalibrationProblem, CalibrationResult, OptimizerSettings, TraceEntry,
};
pub use quotes::{load_quotes, read_quotes, write_quotes, OptionQuote};

use crate::error::{Error, Result};
use crate::noise::{FbmSampler, Grid, JointNoise, NoiseMethod, NoiseSpec, RngPolicy};
use crate::rde::{
    exp_martingale_price, qheston_pricing_system, solve_factors, QHestonPricing, QuadraticVol,
    SolverConfig,
};
use crate::stats::Summary;

/// Model parameters. `θ` is a constant drift coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QHestonParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub theta: f64,
    pub eta: f64,
    pub z0: f64,
    pub lambda: f64,
    pub hurst: f64,
}

/// Names of the calibrated coordinates, in vector order.
pub const PARAM_NAMES: [&str; 6] = ["a", "b", "c", "theta", "eta", "z0"];

impl QHestonParams {
    /// Calibrated coordinates `(a, b, c, θ, η, z₀)`.
    pub fn to_vector(&self) -> [f64; 6] {
        [self.a, self.b, self.c, self.theta, self.eta, self.z0]
    }

    /// Replaces the calibrated coordinates, keeping `λ` and `H`.
    pub fn with_vector(&self, p: &[f64; 6]) -> Self {
        QHestonParams {
            a: p[0],
            b: p[1],
            c: p[2],
            theta: p[3],
            eta: p[4],
            z0: p[5],
            ..*self
        }
    }

    /// `a = 0` is allowed: it gives constant volatility `√c`.
    pub fn validate(&self) -> Result<()> {
        if self.to_vector().iter().any(|v| !v.is_finite()) {
            return Err(Error::param("params", "all parameters must be finite"));
        }
        if self.a < 0.0 {
            return Err(Error::param("a", "must be non-negative"));
        }
        for (name, v) in [("c", self.c), ("eta", self.eta), ("lambda", self.lambda)] {
            if !(v > 0.0) {
                return Err(Error::param(name, format!("{v} must be positive")));
            }
        }
        if !(self.hurst > 0.0 && self.hurst <= 0.5) {
            return Err(Error::param(
                "hurst",
                format!("{} not in (0, 1/2]", self.hurst),
            ));
        }
        Ok(())
    }

    pub fn vol(&self) -> Result<QuadraticVol> {
        QuadraticVol::new(self.a, self.b, self.c)
    }
}

/// Reference SPX fit at `T = 0.548`, kept as an I/O fixture. Its Hurst
/// exponent was not reported and is stored as `NaN`.
pub const REFERENCE_FIT: QHestonParams = QHestonParams {
    a: 0.3152,
    b: 0.3044,
    c: 0.0316,
    theta: 0.2468,
    eta: 0.9102,
    z0: 0.1154,
    lambda: 1.0,
    hurst: f64::NAN,
};

pub const REFERENCE_FIT_MATURITY: f64 = 0.548;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McSettings {
    /// Time steps on the longest maturity.
    pub n_steps: usize,
    pub n_paths: usize,
    pub seed: u64,
    pub s0: f64,
    pub solver: SolverConfig,
}

impl McSettings {
    pub fn new(n_steps: usize, n_paths: usize, seed: u64) -> Self {
        McSettings {
            n_steps,
            n_paths,
            seed,
            s0: 1.0,
            solver: SolverConfig::default(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_steps == 0 || self.n_paths < 2 {
            return Err(Error::param("n_paths", "need n_steps ≥ 1 and n_paths ≥ 2"));
        }
        if !(self.s0 > 0.0) {
            return Err(Error::param("s0", "must be positive"));
        }
        self.solver.validate()
    }
}

/// Pre-generated hybrid-scheme paths with `X` driven by `W` itself.
#[derive(Debug, Clone)]
pub struct PathBank {
    pub grid: Grid,
    pub hurst: f64,
    pub paths: Vec<JointNoise>,
}

impl PathBank {
    pub fn build(
        hurst: f64,
        t_max: f64,
        n_steps: usize,
        n_paths: usize,
        seed: u64,
    ) -> Result<Self> {
        let grid = Grid::new(t_max, n_steps)?;
        let sampler = FbmSampler::new(NoiseSpec::new(grid, hurst, 1.0, NoiseMethod::Hybrid)?);
        let rng = RngPolicy::new(seed);
        let paths = (0..n_paths as u64)
            .into_par_iter()
            .map(|p| {
                let mut nz = sampler.sample(&rng, p);
                nz.driver = None;
                nz
            })
            .collect();
        Ok(PathBank { grid, hurst, paths })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct CacheKey {
    seed: u64,
    n_steps: usize,
    n_paths: usize,
    hurst: u64,
    t_max: u64,
}

/// Path banks keyed by `(seed, n_steps, n_paths, H, T_max)`.
#[derive(Debug, Default)]
pub struct PathCache {
    banks: Mutex<HashMap<CacheKey, Arc<PathBank>>>,
}

impl PathCache {
    pub fn new() -> Self {
        PathCache::default()
    }

    pub fn get(&self, hurst: f64, t_max: f64, mc: &McSettings) -> Result<Arc<PathBank>> {
        let key = CacheKey {
            seed: mc.seed,
            n_steps: mc.n_steps,
            n_paths: mc.n_paths,
            hurst: hurst.to_bits(),
            t_max: t_max.to_bits(),
        };
        let mut banks = self.banks.lock().expect("path cache poisoned");
        if let Some(b) = banks.get(&key) {
            return Ok(b.clone());
        }
        let bank = Arc::new(PathBank::build(
            hurst, t_max, mc.n_steps, mc.n_paths, mc.seed,
        )?);
        banks.insert(key, bank.clone());
        Ok(bank)
    }

    pub fn len(&self) -> usize {
        self.banks.lock().expect("path cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Contract {
    pub maturity: f64,
    pub strike: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McPrice {
    pub maturity: f64,
    /// Grid time actually used for the maturity.
    pub grid_maturity: f64,
    pub strike: f64,
    pub price: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceReport {
    pub prices: Vec<McPrice>,
    /// `(grid maturity, sample of S_T)` for each distinct exercise date.
    pub forwards: Vec<(f64, Summary)>,
}

impl PriceReport {
    /// Largest `|E[S_T] − S₀| / SE` over maturities.
    pub fn max_forward_z(&self, s0: f64) -> f64 {
        self.forwards
            .iter()
            .map(|(_, s)| (s.mean - s0).abs() / s.stderr.max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max)
    }
}

/// Grid index of each maturity on the grid of the longest one, snapped to
/// the nearest point.
fn maturity_indices(grid: &Grid, contracts: &[Contract]) -> Vec<usize> {
    contracts
        .iter()
        .map(|c| ((c.maturity / grid.dt()).round() as usize).clamp(1, grid.n))
        .collect()
}

/// Terminal prices `S_{t_k}` of every path at the requested grid indices.
fn simulate_terminals(
    params: &QHestonParams,
    bank: &PathBank,
    mc: &McSettings,
    idx: &[usize],
) -> Result<Vec<Vec<f64>>> {
    let vol = params.vol()?;
    let sys = qheston_pricing_system(QHestonPricing::new(
        vol,
        params.theta,
        params.eta,
        params.lambda,
        mc.s0,
        params.z0,
    )?)?;
    let last = *idx.iter().max().unwrap();
    bank.paths
        .par_iter()
        .map(|nz| -> Result<Vec<f64>> {
            let nz = if last < bank.grid.n {
                nz.truncate(last)?
            } else {
                nz.clone()
            };
            let sol = solve_factors(&sys, &nz, &mc.solver)?;
            let s = exp_martingale_price(&sol.v[0], &nz.w_increments(), nz.grid.dt(), &vol, mc.s0)?;
            Ok(idx.iter().map(|&k| s[k]).collect())
        })
        .collect()
}

/// Monte Carlo call prices (zero rates). All maturities share the grid of
/// the longest one; shorter ones read the same paths at the nearest grid
/// point.
pub fn mc_call_prices(
    params: &QHestonParams,
    contracts: &[Contract],
    mc: &McSettings,
    cache: &PathCache,
) -> Result<PriceReport> {
    params.validate()?;
    mc.validate()?;
    if contracts.is_empty() {
        return Err(Error::Empty("contracts"));
    }
    if contracts
        .iter()
        .any(|c| !(c.maturity > 0.0 && c.strike > 0.0))
    {
        return Err(Error::param(
            "contracts",
            "maturities and strikes must be positive",
        ));
    }
    let t_max = contracts.iter().map(|c| c.maturity).fold(0.0, f64::max);
    let bank = cache.get(params.hurst, t_max, mc)?;
    let idx = maturity_indices(&bank.grid, contracts);
    let mut dates = idx.clone();
    dates.sort_unstable();
    dates.dedup();
    let terminals = simulate_terminals(params, &bank, mc, &dates)?;
    let col = |k: usize| dates.binary_search(&k).unwrap();
    let prices = contracts
        .iter()
        .zip(&idx)
        .map(|(c, &k)| {
            let j = col(k);
            let payoff: Vec<f64> = terminals
                .iter()
                .map(|s| (s[j] - c.strike).max(0.0))
                .collect();
            let sm = Summary::of(&payoff);
            McPrice {
                maturity: c.maturity,
                grid_maturity: bank.grid.time(k),
                strike: c.strike,
                price: sm.mean,
                stderr: sm.stderr,
            }
        })
        .collect();
    let forwards = dates
        .iter()
        .enumerate()
        .map(|(j, &k)| {
            let s: Vec<f64> = terminals.iter().map(|v| v[j]).collect();
            (bank.grid.time(k), Summary::of(&s))
        })
        .collect();
    Ok(PriceReport { prices, forwards })
}

/// `Σ (C(𝔭) − C^obs)²` over the quotes.
pub fn loss(
    params: &QHestonParams,
    quotes: &[OptionQuote],
    mc: &McSettings,
    cache: &PathCache,
) -> Result<f64> {
    Ok(loss_with_report(params, quotes, mc, cache)?.0)
}

pub(crate) fn loss_with_report(
    params: &QHestonParams,
    quotes: &[OptionQuote],
    mc: &McSettings,
    cache: &PathCache,
) -> Result<(f64, PriceReport)> {
    if quotes.is_empty() {
        return Err(Error::Empty("quotes"));
    }
    let contracts: Vec<Contract> = quotes.iter().map(OptionQuote::contract).collect();
    let report = mc_call_prices(params, &contracts, mc, cache)?;
    let l = report
        .prices
        .iter()
        .zip(quotes)
        .map(|(p, q)| (p.price - q.price).powi(2))
        .sum();
    Ok((l, report))
}

/// Black–Scholes call price with zero rates.
pub fn black_scholes_call(s0: f64, strike: f64, maturity: f64, sigma: f64) -> f64 {
    let sd = sigma * maturity.sqrt();
    if sd == 0.0 {
        return (s0 - strike).max(0.0);
    }
    let n = Normal::standard();
    let d1 = ((s0 / strike).ln() + 0.5 * sd * sd) / sd;
    s0 * n.cdf(d1) - strike * n.cdf(d1 - sd)
}
