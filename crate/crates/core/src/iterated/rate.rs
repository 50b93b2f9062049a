//! Convergence-rate studies on dyadic mesh families.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{holder_error, PrefixTable};
use crate::error::{Error, Result};
use crate::leadlag::MollifiedGrid;
use crate::noise::{FbmSampler, Grid, HybridRefiner, NoiseMethod, NoiseSpec, RngPolicy};
use crate::stats::{loglog_fit, rms, LineFit, Summary};

/// Approximation whose distance to the Itô oracle is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateMethod {
    /// Lead `W`, one-step lagged `X`.
    LeadLag,
    /// Both paths interpolated without lag; diverges when `ρ ≠ 0`, `H < ½`.
    NoLag,
    /// Lead-lag with `X` replaced by a coarse hybrid-scheme path.
    HybridLeadLag,
    /// Lagged mollifier `X̃^ε` against `Ẇ^ε`.
    Mollifier,
}

impl RateMethod {
    pub fn name(self) -> &'static str {
        match self {
            RateMethod::LeadLag => "lead-lag",
            RateMethod::NoLag => "no-lag",
            RateMethod::HybridLeadLag => "hybrid-lead-lag",
            RateMethod::Mollifier => "mollifier",
        }
    }
}

impl std::str::FromStr for RateMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lead-lag" => Ok(RateMethod::LeadLag),
            "no-lag" => Ok(RateMethod::NoLag),
            "hybrid-lead-lag" | "hybrid" => Ok(RateMethod::HybridLeadLag),
            "mollifier" => Ok(RateMethod::Mollifier),
            _ => Err(Error::param("method", format!("unknown rate method `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateConfig {
    pub method: RateMethod,
    pub hurst: f64,
    pub m: usize,
    pub alpha: f64,
    pub rho: f64,
    /// Mesh (or ε) `T · 2^{-l}` for each level `l`.
    pub levels: Vec<u32>,
    pub n_paths: usize,
    /// Oracle mesh = finest mesh / `oracle_factor`.
    pub oracle_factor: usize,
    pub t_end: f64,
    pub seed: u64,
}

impl RateConfig {
    pub fn new(method: RateMethod, hurst: f64, m: usize, seed: u64) -> Self {
        RateConfig {
            method,
            hurst,
            m,
            alpha: hurst,
            rho: 1.0,
            levels: (4..=9).collect(),
            n_paths: 256,
            oracle_factor: 64,
            t_end: 1.0,
            seed,
        }
    }

    /// Hölder exponent `γ = mH + ½ − α`.
    pub fn gamma(&self) -> f64 {
        self.m as f64 * self.hurst + 0.5 - self.alpha
    }

    fn validate(&self) -> Result<()> {
        if self.levels.len() < 3 {
            return Err(Error::param("levels", "need at least three mesh levels"));
        }
        if self.levels.windows(2).any(|p| p[1] <= p[0]) {
            return Err(Error::param("levels", "levels must increase"));
        }
        if !(self.alpha > 0.0 && self.alpha <= self.hurst + 1e-12) {
            return Err(Error::param(
                "alpha",
                format!("{} not in (0, H]", self.alpha),
            ));
        }
        if self.oracle_factor < 2 || self.oracle_factor % 2 != 0 {
            return Err(Error::param("oracle_factor", "must be an even number ≥ 2"));
        }
        if self.n_paths < 2 {
            return Err(Error::param("n_paths", "need at least two paths"));
        }
        if self.method == RateMethod::Mollifier && self.oracle_factor < 8 {
            return Err(Error::param(
                "oracle_factor",
                "mollifier needs ≥ 8 fine steps per ε",
            ));
        }
        Ok(())
    }

    fn fine_grid(&self) -> Result<Grid> {
        let finest = *self.levels.last().unwrap();
        Grid::new(self.t_end, (1usize << finest) * self.oracle_factor)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub mesh: f64,
    pub mean_error: f64,
    pub stderr: f64,
    /// RMS over paths of the error on the full evaluation interval.
    pub interval_rms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateStudy {
    pub config: RateConfig,
    pub gamma: f64,
    pub rows: Vec<RateRow>,
    pub fit: LineFit,
    /// Log-log fit of `interval_rms`; free of the sup over a growing pair set.
    pub interval_fit: LineFit,
}

impl RateStudy {
    /// CSV with header `mesh,mean_error,stderr,interval_rms,gamma,alpha,m,H,method,n_paths`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(out);
        wr.write_record([
            "mesh",
            "mean_error",
            "stderr",
            "interval_rms",
            "gamma",
            "alpha",
            "m",
            "H",
            "method",
            "n_paths",
        ])?;
        for r in &self.rows {
            wr.write_record([
                format!("{:.16e}", r.mesh),
                format!("{:.16e}", r.mean_error),
                format!("{:.16e}", r.stderr),
                format!("{:.16e}", r.interval_rms),
                format!("{}", self.gamma),
                format!("{}", self.config.alpha),
                format!("{}", self.config.m),
                format!("{}", self.config.hurst),
                self.config.method.name().to_string(),
                format!("{}", self.config.n_paths),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }
}

struct Level {
    mesh: f64,
    factor: usize,
    refiner: Option<HybridRefiner>,
    mollifier: Option<MollifiedGrid>,
}

/// Mean Hölder error of the chosen approximant against the fine left-point
/// oracle, per level, with a log-log slope fit.
///
/// The sup runs over all pairs of grid points and cell midpoints (for the
/// mollifier: multiples of ε/2 from 3ε on).
pub fn rate_study(cfg: &RateConfig) -> Result<RateStudy> {
    cfg.validate()?;
    let fine = cfg.fine_grid()?;
    let spec = NoiseSpec::new(fine, cfg.hurst, cfg.rho, NoiseMethod::ExactRl)?;
    let sampler = FbmSampler::new(spec);
    let rng = RngPolicy::new(cfg.seed);
    let gamma = cfg.gamma();
    let levels = cfg
        .levels
        .iter()
        .map(|&l| -> Result<Level> {
            let factor = fine.n >> l;
            Ok(Level {
                mesh: cfg.t_end / (1u64 << l) as f64,
                factor,
                refiner: match cfg.method {
                    RateMethod::HybridLeadLag => Some(HybridRefiner::new(cfg.hurst, fine, factor)?),
                    _ => None,
                },
                mollifier: match cfg.method {
                    RateMethod::Mollifier => Some(MollifiedGrid::new(factor, fine.n, fine.dt())?),
                    _ => None,
                },
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let per_path = (0..cfg.n_paths as u64)
        .into_par_iter()
        .map(|p| -> Result<Vec<(f64, f64)>> {
            let noise = sampler.sample(&rng, p);
            levels
                .iter()
                .map(|lv| level_error(cfg, &noise, lv, gamma, fine))
                .collect()
        })
        .collect::<Result<Vec<_>>>()?;

    let rows: Vec<RateRow> = levels
        .iter()
        .enumerate()
        .map(|(i, lv)| {
            let errs: Vec<f64> = per_path.iter().map(|v| v[i].0).collect();
            let whole: Vec<f64> = per_path.iter().map(|v| v[i].1).collect();
            let s = Summary::of(&errs);
            RateRow {
                mesh: lv.mesh,
                mean_error: s.mean,
                stderr: s.stderr,
                interval_rms: rms(&whole),
            }
        })
        .collect();
    let meshes: Vec<f64> = rows.iter().map(|r| r.mesh).collect();
    let means: Vec<f64> = rows.iter().map(|r| r.mean_error).collect();
    let fit = loglog_fit(&meshes, &means)?;
    let whole: Vec<f64> = rows.iter().map(|r| r.interval_rms).collect();
    let interval_fit = loglog_fit(&meshes, &whole)?;
    Ok(RateStudy {
        config: cfg.clone(),
        gamma,
        rows,
        fit,
        interval_fit,
    })
}

fn level_error(
    cfg: &RateConfig,
    noise: &crate::noise::JointNoise,
    lv: &Level,
    gamma: f64,
    fine: Grid,
) -> Result<(f64, f64)> {
    let m = cfg.m;
    let r = lv.factor;
    match cfg.method {
        RateMethod::Mollifier => {
            let mg = lv.mollifier.as_ref().expect("mollifier level");
            let xl = mg.lagged_values(&noise.x)?;
            let wd = mg.derivatives(&noise.w, 0)?;
            let stride = r / 2;
            let first = 3 * r;
            let approx = PrefixTable::smooth(&xl, &wd, fine.dt(), m, stride, first)?;
            let oracle = PrefixTable::left_point(&noise.x, &noise.w, m, stride)?;
            let offset = first / stride;
            let times: Vec<f64> = approx.times().iter().map(|k| k * fine.dt()).collect();
            let diff = |p: usize, q: usize| {
                approx.integral(p, q) - oracle.integral(p + offset, q + offset)
            };
            let sup = holder_error(&times, gamma, diff)?.sup;
            Ok((sup, diff(0, times.len() - 1)))
        }
        _ => {
            let coarse = noise.subsample(r)?;
            let approx = match cfg.method {
                RateMethod::LeadLag => PrefixTable::lead_lag(&coarse.x, &coarse.w, m, 1)?,
                RateMethod::NoLag => PrefixTable::lead_lag(&coarse.x, &coarse.w, m, 0)?,
                RateMethod::HybridLeadLag => {
                    let driver = noise
                        .driver
                        .as_ref()
                        .ok_or(Error::Empty("driver increments"))?;
                    let gx = lv
                        .refiner
                        .as_ref()
                        .expect("hybrid level")
                        .coarse_path(driver)?;
                    PrefixTable::lead_lag(&gx, &coarse.w, m, 1)?
                }
                RateMethod::Mollifier => unreachable!(),
            };
            let oracle = PrefixTable::left_point(&noise.x, &noise.w, m, r / 2)?;
            let times: Vec<f64> = approx.times().iter().map(|p| p * lv.mesh).collect();
            let diff = |p: usize, q: usize| approx.integral(p, q) - oracle.integral(p, q);
            let sup = holder_error(&times, gamma, diff)?.sup;
            Ok((sup, diff(0, times.len() - 1)))
        }
    }
}

/// Hybrid scheme against the fine exact path of the same driver at the
/// coarse partition points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointwiseRow {
    pub mesh: f64,
    /// `max_k` of the RMS error at `t_k`.
    pub sup_rms: f64,
    /// RMS error at the terminal time.
    pub terminal_rms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointwiseStudy {
    pub hurst: f64,
    pub n_paths: usize,
    pub rows: Vec<PointwiseRow>,
    pub fit: LineFit,
}

/// RMS distance between the coarse hybrid path and the fine reference path
/// at partition points, for meshes `T · 2^{-l}`.
pub fn hybrid_pointwise_study(
    hurst: f64,
    levels: &[u32],
    n_paths: usize,
    oracle_factor: usize,
    seed: u64,
) -> Result<PointwiseStudy> {
    if levels.len() < 3 {
        return Err(Error::param("levels", "need at least three mesh levels"));
    }
    if oracle_factor < 1 || n_paths < 2 {
        return Err(Error::param(
            "oracle_factor",
            "need a positive factor and two paths",
        ));
    }
    let finest = *levels.iter().max().unwrap();
    let fine = Grid::new(1.0, (1usize << finest) * oracle_factor)?;
    let sampler = FbmSampler::new(NoiseSpec::new(fine, hurst, 1.0, NoiseMethod::ExactRl)?);
    let refiners = levels
        .iter()
        .map(|&l| HybridRefiner::new(hurst, fine, fine.n >> l))
        .collect::<Result<Vec<_>>>()?;
    let rng = RngPolicy::new(seed);
    // per path, per level: squared errors at each coarse point
    let sq = (0..n_paths as u64)
        .into_par_iter()
        .map(|p| -> Result<Vec<Vec<f64>>> {
            let noise = sampler.sample(&rng, p);
            let driver = noise.driver.as_ref().expect("sampled driver");
            levels
                .iter()
                .zip(&refiners)
                .map(|(&l, rf)| {
                    let r = fine.n >> l;
                    let gx = rf.coarse_path(driver)?;
                    Ok(gx
                        .iter()
                        .enumerate()
                        .map(|(k, g)| (g - noise.x[k * r]).powi(2))
                        .collect())
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<PointwiseRow> = levels
        .iter()
        .enumerate()
        .map(|(i, &l)| {
            let npts = sq[0][i].len();
            let rms_at =
                |k: usize| (sq.iter().map(|v| v[i][k]).sum::<f64>() / n_paths as f64).sqrt();
            let sup_rms = (1..npts).map(rms_at).fold(0.0, f64::max);
            PointwiseRow {
                mesh: 1.0 / (1u64 << l) as f64,
                sup_rms,
                terminal_rms: rms_at(npts - 1),
            }
        })
        .collect();
    let fit = loglog_fit(
        &rows.iter().map(|r| r.mesh).collect::<Vec<_>>(),
        &rows.iter().map(|r| r.sup_rms).collect::<Vec<_>>(),
    )?;
    Ok(PointwiseStudy {
        hurst,
        n_paths,
        rows,
        fit,
    })
}

/// Sample of `E[X^ε_{s,t} Ẇ^ε_t]`, with or without the `2ε` lag on `X`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenormalisationCheck {
    pub lagged: bool,
    pub summary: Summary,
    /// `|mean| / stderr`.
    pub z_score: f64,
}

/// Estimates the renormalisation term `E[X^ε_{s,t} Ẇ^ε_t]` from `n_paths`
/// paths on a fine grid with `width` steps per ε.
#[allow(clippy::too_many_arguments)]
pub fn renormalisation_check(
    hurst: f64,
    rho: f64,
    grid: Grid,
    width: usize,
    s: f64,
    t: f64,
    n_paths: usize,
    lagged: bool,
    seed: u64,
) -> Result<RenormalisationCheck> {
    let sampler = FbmSampler::new(NoiseSpec::new(grid, hurst, rho, NoiseMethod::ExactRl)?);
    let mg = MollifiedGrid::new(width, grid.n, grid.dt())?;
    let (ks, kt) = (grid.index_of(s)?, grid.index_of(t)?);
    let shift = if lagged { 2 * width } else { 0 };
    let rng = RngPolicy::new(seed);
    let samples: Vec<f64> = (0..n_paths as u64)
        .into_par_iter()
        .map(|p| {
            let nz = sampler.sample(&rng, p);
            let dx = mg.value_at(&nz.x, kt, shift) - mg.value_at(&nz.x, ks, shift);
            dx * mg.derivative_at(&nz.w, kt, 0)
        })
        .collect();
    let summary = Summary::of(&samples);
    Ok(RenormalisationCheck {
        lagged,
        summary,
        z_score: summary.mean.abs() / summary.stderr,
    })
}

/// RMS over paths, exposed for examples that report error scales.
pub fn rms_of(xs: &[f64]) -> f64 {
    rms(xs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn too_few_levels_rejected() {
        let mut cfg = RateConfig::new(RateMethod::LeadLag, 0.3, 1, 1);
        cfg.levels = vec![3, 4];
        assert!(rate_study(&cfg).is_err());
        cfg.levels = vec![3, 4, 5];
        cfg.alpha = 0.4;
        assert!(rate_study(&cfg).is_err());
    }

    #[test]
    fn tiny_study_interval_error_shrinks() {
        let mut cfg = RateConfig::new(RateMethod::LeadLag, 0.3, 1, 5);
        cfg.levels = vec![2, 3, 4, 5];
        cfg.n_paths = 32;
        cfg.oracle_factor = 16;
        let st = rate_study(&cfg).unwrap();
        assert_eq!(st.rows.len(), 4);
        assert!(st
            .rows
            .iter()
            .all(|r| r.mean_error.is_finite() && r.mean_error > 0.0));
        assert!(st.rows[0].interval_rms > st.rows[3].interval_rms);
        let mut buf = Vec::new();
        st.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(
            text.starts_with("mesh,mean_error,stderr,interval_rms,gamma,alpha,m,H,method,n_paths")
        );
        assert_eq!(text.lines().count(), 5);
    }

    #[test]
    fn lagged_renormalisation_is_centred() {
        let g = Grid::new(1.0, 1024).unwrap();
        let lag = renormalisation_check(0.1, 1.0, g, 64, 0.25, 0.5, 400, true, 3).unwrap();
        assert!(lag.z_score < 4.0, "{lag:?}");
    }
}
