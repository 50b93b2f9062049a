//! Refinement, divergence and drift experiments on the test system.
//!
//! One noise path is sampled on the finest mesh and subsampled for every
//! coarser one, so all levels see the same driver.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    exp_martingale_price, qheston_test_system, solve_wong_zakai, DriftTerms, SolutionPath,
    SolverConfig, TestSystemParams,
};
use crate::error::{Error, Result};
use crate::noise::{FbmSampler, Grid, JointNoise, NoiseMethod, NoiseSpec, RngPolicy};
use crate::stats::Summary;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub params: TestSystemParams,
    /// Noise meshes, coarsest first; each one a whole multiple of the next.
    pub eps: Vec<f64>,
    pub n_paths: usize,
    pub hurst: f64,
    pub rho: f64,
    pub solver: SolverConfig,
    pub t_end: f64,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn new(seed: u64) -> Self {
        ExperimentConfig {
            params: TestSystemParams::default(),
            eps: vec![1e-2, 1e-3, 1e-4],
            n_paths: 200,
            hurst: 0.1,
            rho: 0.8,
            solver: SolverConfig::default(),
            t_end: 1.0,
            seed,
        }
    }

    /// The same experiment without lag and with `ρ = 1`.
    pub fn no_lag(mut self) -> Self {
        self.solver.lag_fraction = 0.0;
        self.rho = 1.0;
        self
    }

    /// Sets `γ₀ = γ₁`, which makes the two factor vector fields commute.
    pub fn equal_gammas(mut self) -> Self {
        self.params.gamma0 = self.params.gamma1;
        self
    }

    fn grids(&self) -> Result<(Grid, Vec<usize>)> {
        if self.eps.is_empty() {
            return Err(Error::Empty("eps levels"));
        }
        if self.n_paths < 2 {
            return Err(Error::param("n_paths", "need at least two paths"));
        }
        let finest = *self.eps.last().unwrap();
        let fine = Grid::with_mesh(self.t_end, finest)?;
        let factors = self
            .eps
            .iter()
            .map(|&e| {
                let f = e / finest;
                let r = f.round();
                if r < 1.0 || (f - r).abs() > 1e-9 * r {
                    return Err(Error::param(
                        "eps",
                        format!("{e} is not a multiple of {finest}"),
                    ));
                }
                Ok(r as usize)
            })
            .collect::<Result<Vec<_>>>()?;
        if factors.windows(2).any(|p| p[0] <= p[1] || p[0] % p[1] != 0) {
            return Err(Error::param(
                "eps",
                "levels must strictly refine each other",
            ));
        }
        Ok((fine, factors))
    }

    fn sampler(&self) -> Result<(FbmSampler, Vec<usize>)> {
        let (fine, factors) = self.grids()?;
        let spec = NoiseSpec::new(fine, self.hurst, self.rho, NoiseMethod::Hybrid)?;
        Ok((FbmSampler::new(spec), factors))
    }
}

/// Solution of one level together with the exponential martingale built
/// from its factor path.
#[derive(Debug, Clone)]
pub struct LevelPath {
    pub eps: f64,
    pub solution: SolutionPath,
    pub s_exp: Vec<f64>,
}

fn solve_level(cfg: &ExperimentConfig, terms: DriftTerms, noise: &JointNoise) -> Result<LevelPath> {
    let sys = qheston_test_system(cfg.params)?.with_terms(terms);
    let solution = solve_wong_zakai(&sys, noise, &cfg.solver)?;
    let s_exp = exp_martingale_price(
        &solution.v[0],
        &noise.w_increments(),
        noise.grid.dt(),
        &sys.inner().vol(),
        cfg.params.s0,
    )?;
    Ok(LevelPath {
        eps: noise.grid.dt(),
        solution,
        s_exp,
    })
}

/// Full trajectories of path `path_index` at every level.
pub fn solve_levels(
    cfg: &ExperimentConfig,
    terms: DriftTerms,
    path_index: u64,
) -> Result<Vec<LevelPath>> {
    let (sampler, factors) = cfg.sampler()?;
    let noise = sampler.sample(&RngPolicy::new(cfg.seed), path_index);
    factors
        .iter()
        .map(|&f| solve_level(cfg, terms, &noise.subsample(f)?))
        .collect()
}

#[derive(Debug, Clone, Copy)]
struct Terminal {
    s: f64,
    z: f64,
    s_exp: f64,
    blew_up: bool,
}

fn terminals(
    cfg: &ExperimentConfig,
    terms: DriftTerms,
) -> Result<(Vec<usize>, Vec<Vec<Terminal>>)> {
    let (sampler, factors) = cfg.sampler()?;
    let rng = RngPolicy::new(cfg.seed);
    let per_path = (0..cfg.n_paths as u64)
        .into_par_iter()
        .map(|p| -> Result<Vec<Terminal>> {
            let noise = sampler.sample(&rng, p);
            factors
                .iter()
                .map(|&f| {
                    let lp = solve_level(cfg, terms, &noise.subsample(f)?)?;
                    Ok(Terminal {
                        s: lp.solution.s_terminal(),
                        z: lp.solution.v_terminal(0),
                        s_exp: *lp.s_exp.last().unwrap(),
                        blew_up: lp.solution.diagnostics.blew_up,
                    })
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((factors, per_path))
}

/// `‖a − b‖ / ‖a − base‖` in L² over paths, skipping non-finite pairs.
fn relative_l2(pairs: impl Iterator<Item = (f64, f64)>, base: f64) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (a, b) in pairs.filter(|(a, b)| a.is_finite() && b.is_finite()) {
        num += (a - b).powi(2);
        den += (a - base).powi(2);
    }
    (num / den).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefinementRow {
    pub eps: f64,
    /// `‖S^exp_T − S_T‖ / ‖S_T − S_0‖`.
    pub exp_gap: f64,
    /// Mean of `|S_T − S^exp_T| / S_0`.
    pub mean_abs_exp_gap: f64,
    /// `‖S'_T − S_T‖ / ‖S'_T − S_0‖` against the next finer level.
    pub s_gap: Option<f64>,
    /// Same for the factor.
    pub z_gap: Option<f64>,
    pub blow_ups: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementStudy {
    pub config: ExperimentConfig,
    pub rows: Vec<RefinementRow>,
}

impl RefinementStudy {
    /// Ratios of consecutive successive-refinement gaps, finer over coarser.
    pub fn growth(&self, pick: impl Fn(&RefinementRow) -> Option<f64>) -> Vec<f64> {
        let gaps: Vec<f64> = self.rows.iter().filter_map(pick).collect();
        gaps.windows(2).map(|p| p[1] / p[0]).collect()
    }

    /// CSV `eps,exp_gap,mean_abs_exp_gap,s_gap,z_gap,blow_ups`; gaps that
    /// need a finer level are left empty on the last row.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(out);
        wr.write_record([
            "eps",
            "exp_gap",
            "mean_abs_exp_gap",
            "s_gap",
            "z_gap",
            "blow_ups",
        ])?;
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.10e}"));
        for r in &self.rows {
            wr.write_record([
                format!("{:e}", r.eps),
                format!("{:.10e}", r.exp_gap),
                format!("{:.10e}", r.mean_abs_exp_gap),
                opt(r.s_gap),
                opt(r.z_gap),
                r.blow_ups.to_string(),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Gap to the exponential martingale and successive-refinement gaps at
/// every level, with the martingale drift in place.
pub fn refinement_study(cfg: &ExperimentConfig) -> Result<RefinementStudy> {
    let (factors, per_path) = terminals(cfg, DriftTerms::FULL)?;
    let (s0, z0) = (cfg.params.s0, cfg.params.z0);
    let rows = (0..factors.len())
        .map(|l| {
            let col = || per_path.iter().map(move |v| v[l]);
            let abs: Vec<f64> = col()
                .filter(|t| t.s.is_finite())
                .map(|t| (t.s - t.s_exp).abs() / s0)
                .collect();
            let next = (l + 1 < factors.len()).then_some(l + 1);
            RefinementRow {
                eps: cfg.eps[l],
                exp_gap: relative_l2(col().map(|t| (t.s, t.s_exp)), s0),
                mean_abs_exp_gap: Summary::of(&abs).mean,
                s_gap: next.map(|n| relative_l2(per_path.iter().map(|v| (v[n].s, v[l].s)), s0)),
                z_gap: next.map(|n| relative_l2(per_path.iter().map(|v| (v[n].z, v[l].z)), z0)),
                blow_ups: col().filter(|t| t.blew_up).count(),
            }
        })
        .collect();
    Ok(RefinementStudy {
        config: cfg.clone(),
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftRow {
    pub s_term: bool,
    pub v_term: bool,
    /// Mean and standard error of `|S_T − S^exp_T| / S_0`.
    pub gap: Summary,
}

impl DriftRow {
    pub fn label(&self) -> &'static str {
        match (self.s_term, self.v_term) {
            (true, true) => "full",
            (false, true) => "without-s-term",
            (true, false) => "without-v-term",
            (false, false) => "zero",
        }
    }
}

/// Gap between the solved price and the exponential martingale of the same
/// factor path, for the full drift and each ablation, at the finest mesh of
/// `cfg.eps` and on a common batch of paths.
pub fn drift_discrimination(cfg: &ExperimentConfig) -> Result<Vec<DriftRow>> {
    let mut one = cfg.clone();
    one.eps = vec![*cfg.eps.last().ok_or(Error::Empty("eps levels"))?];
    [
        DriftTerms::FULL,
        DriftTerms::WITHOUT_S,
        DriftTerms::WITHOUT_V,
        DriftTerms::NONE,
    ]
    .into_iter()
    .map(|terms| {
        let (_, per_path) = terminals(&one, terms)?;
        let gaps: Vec<f64> = per_path
            .iter()
            .map(|v| (v[0].s - v[0].s_exp).abs() / cfg.params.s0)
            .filter(|g| g.is_finite())
            .collect();
        Ok(DriftRow {
            s_term: terms.s_term,
            v_term: terms.v_term,
            gap: Summary::of(&gaps),
        })
    })
    .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MartingaleCheck {
    pub eps: f64,
    pub s_terminal: Summary,
    /// `|E[S_T] − S_0| / SE`.
    pub z_score: f64,
}

/// Sample mean of the solved `S_T` at the finest mesh of `cfg.eps`.
pub fn martingale_check(cfg: &ExperimentConfig) -> Result<MartingaleCheck> {
    let mut one = cfg.clone();
    let eps = *cfg.eps.last().ok_or(Error::Empty("eps levels"))?;
    one.eps = vec![eps];
    let (_, per_path) = terminals(&one, DriftTerms::FULL)?;
    let s: Vec<f64> = per_path.iter().map(|v| v[0].s).collect();
    let summary = Summary::of(&s);
    Ok(MartingaleCheck {
        eps,
        s_terminal: summary,
        z_score: (summary.mean - cfg.params.s0).abs() / summary.stderr,
    })
}
