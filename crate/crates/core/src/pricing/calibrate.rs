//! Nelder–Mead least-squares calibration.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{loss_with_report, McSettings, OptionQuote, PathCache, QHestonParams, PARAM_NAMES};
use crate::error::{Error, Result};

/// Box constraints on `(a, b, c, θ, η, z₀)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lower: [f64; 6],
    pub upper: [f64; 6],
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds {
            lower: [1e-4, 1e-4, 1e-5, -3.0, 1e-3, 1e-4],
            upper: [5.0, 3.0, 1.0, 3.0, 5.0, 3.0],
        }
    }
}

impl Bounds {
    fn clip(&self, x: &[f64; 6]) -> [f64; 6] {
        std::array::from_fn(|i| x[i].clamp(self.lower[i], self.upper[i]))
    }

    /// Squared distance to the box, each coordinate scaled by its width.
    fn violation(&self, x: &[f64; 6]) -> f64 {
        (0..6)
            .map(|i| {
                let over = (x[i] - x[i].clamp(self.lower[i], self.upper[i]))
                    / (self.upper[i] - self.lower[i]);
                over * over
            })
            .sum()
    }

    fn contains(&self, x: &[f64; 6]) -> bool {
        (0..6).all(|i| self.lower[i] <= x[i] && x[i] <= self.upper[i])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerSettings {
    pub max_iters: usize,
    /// Stop when all vertices are within `x_tol` of the best one...
    pub x_tol: f64,
    /// ...and their losses within `f_tol`.
    pub f_tol: f64,
    /// Initial simplex edge relative to each coordinate.
    pub initial_step: f64,
    /// Weight of the out-of-bounds penalty.
    pub penalty: f64,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        OptimizerSettings {
            max_iters: 300,
            x_tol: 1e-6,
            f_tol: 1e-14,
            initial_step: 0.1,
            penalty: 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CalibrationProblem {
    pub quotes: Vec<OptionQuote>,
    pub initial: QHestonParams,
    pub bounds: Bounds,
    pub mc: McSettings,
    pub optimizer: OptimizerSettings,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub iteration: usize,
    pub evaluations: usize,
    pub loss: f64,
    pub params: [f64; 6],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationDiagnostics {
    /// Largest forward z-score `|E[S_T] − S₀|/SE` over all evaluations.
    pub max_forward_z: f64,
    /// Quotes priced below intrinsic value.
    pub below_intrinsic: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub loss: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    pub seed: u64,
    pub n_steps: usize,
    pub n_paths: usize,
    pub started_at: String,
    pub finished_at: String,
    pub params: QHestonParams,
    pub diagnostics: CalibrationDiagnostics,
    #[serde(default)]
    pub trace: Vec<TraceEntry>,
}

struct Objective<'a> {
    problem: &'a CalibrationProblem,
    cache: PathCache,
    evaluations: usize,
    max_forward_z: f64,
}

impl Objective<'_> {
    fn eval(&mut self, x: &[f64; 6]) -> Result<f64> {
        let b = &self.problem.bounds;
        let clipped = b.clip(x);
        let params = self.problem.initial.with_vector(&clipped);
        let (l, report) =
            loss_with_report(&params, &self.problem.quotes, &self.problem.mc, &self.cache)?;
        self.evaluations += 1;
        if !l.is_finite() {
            return Err(Error::NonFiniteLoss {
                params: clipped.to_vec(),
            });
        }
        self.max_forward_z = self
            .max_forward_z
            .max(report.max_forward_z(self.problem.mc.s0));
        Ok(l + self.problem.optimizer.penalty * b.violation(x))
    }
}

pub fn calibrate(problem: &CalibrationProblem) -> Result<CalibrationResult> {
    calibrate_with(problem, |_| {})
}

/// Minimizes the loss over `(a, b, c, θ, η, z₀)` with `λ`, `H` fixed,
/// calling `on_iter` after every simplex iteration.
pub fn calibrate_with(
    problem: &CalibrationProblem,
    mut on_iter: impl FnMut(&TraceEntry),
) -> Result<CalibrationResult> {
    let started_at = chrono::Utc::now().to_rfc3339();
    let x0 = problem.initial.to_vector();
    if !problem.bounds.contains(&x0) {
        return Err(Error::param(
            "initial",
            "initial point lies outside the bounds",
        ));
    }
    problem.initial.validate()?;
    let opt = problem.optimizer;
    let mut obj = Objective {
        problem,
        cache: PathCache::new(),
        evaluations: 0,
        max_forward_z: 0.0,
    };

    let n = 6;
    let mut simplex: Vec<([f64; 6], f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0, obj.eval(&x0)?));
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    if opt.max_iters > 0 {
        for i in 0..n {
            let mut x = x0;
            x[i] = if x0[i] != 0.0 {
                x0[i] * (1.0 + opt.initial_step)
            } else {
                2.5e-4
            };
            simplex.push((x, obj.eval(&x)?));
        }
    }
    let by_loss = |s: &mut Vec<([f64; 6], f64)>| s.sort_by(|a, b| a.1.total_cmp(&b.1));
    by_loss(&mut simplex);

    while iterations < opt.max_iters {
        let best = simplex[0];
        let spread_x = simplex[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(&best.0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        let spread_f = simplex[1..]
            .iter()
            .map(|(_, f)| (f - best.1).abs())
            .fold(0.0, f64::max);
        if spread_x <= opt.x_tol && spread_f <= opt.f_tol {
            converged = true;
            break;
        }
        iterations += 1;
        let centroid: [f64; 6] =
            std::array::from_fn(|j| simplex[..n].iter().map(|(x, _)| x[j]).sum::<f64>() / n as f64);
        let along = |t: f64, from: &[f64; 6]| -> [f64; 6] {
            std::array::from_fn(|j| centroid[j] + t * (from[j] - centroid[j]))
        };
        let worst = simplex[n];
        let xr = along(-1.0, &worst.0);
        let fr = obj.eval(&xr)?;
        if fr < simplex[0].1 {
            let xe = along(-2.0, &worst.0);
            let fe = obj.eval(&xe)?;
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < worst.1 {
                let xc = along(-0.5, &worst.0);
                (xc, obj.eval(&xc)?)
            } else {
                let xc = along(0.5, &worst.0);
                (xc, obj.eval(&xc)?)
            };
            if fc < fr.min(worst.1) {
                simplex[n] = (xc, fc);
            } else {
                let x_best = simplex[0].0;
                for v in simplex.iter_mut().skip(1) {
                    let x: [f64; 6] =
                        std::array::from_fn(|j| x_best[j] + 0.5 * (v.0[j] - x_best[j]));
                    *v = (x, obj.eval(&x)?);
                }
            }
        }
        by_loss(&mut simplex);
        let entry = TraceEntry {
            iteration: iterations,
            evaluations: obj.evaluations,
            loss: simplex[0].1,
            params: problem.bounds.clip(&simplex[0].0),
        };
        on_iter(&entry);
        trace.push(entry);
    }

    let best = problem.bounds.clip(&simplex[0].0);
    let params = problem.initial.with_vector(&best);
    let loss = loss_with_report(&params, &problem.quotes, &problem.mc, &obj.cache)?.0;
    Ok(CalibrationResult {
        loss,
        iterations,
        evaluations: obj.evaluations,
        converged,
        seed: problem.mc.seed,
        n_steps: problem.mc.n_steps,
        n_paths: problem.mc.n_paths,
        started_at,
        finished_at: chrono::Utc::now().to_rfc3339(),
        params,
        diagnostics: CalibrationDiagnostics {
            max_forward_z: obj.max_forward_z,
            below_intrinsic: problem
                .quotes
                .iter()
                .filter(|q| q.below_intrinsic(problem.mc.s0))
                .count(),
        },
        trace,
    })
}

/// Writes the result as TOML.
pub fn save_result(result: &CalibrationResult, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, toml::to_string(result)?)?;
    Ok(())
}

pub fn load_result(path: impl AsRef<Path>) -> Result<CalibrationResult> {
    Ok(toml::from_str(&fs::read_to_string(path)?)?)
}

/// CSV `iteration,evaluations,loss,a,b,c,theta,eta,z0`.
pub fn write_trace_csv<W: Write>(out: W, trace: &[TraceEntry]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(out);
    let mut header = vec!["iteration", "evaluations", "loss"];
    header.extend(PARAM_NAMES);
    wr.write_record(&header)?;
    for e in trace {
        let mut row = vec![
            e.iteration.to_string(),
            e.evaluations.to_string(),
            format!("{:e}", e.loss),
        ];
        row.extend(e.params.iter().map(|p| p.to_string()));
        wr.write_record(&row)?;
    }
    wr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::super::{mc_call_prices, Contract, REFERENCE_FIT};
    use super::*;

    fn truth() -> QHestonParams {
        QHestonParams {
            hurst: 0.1,
            ..REFERENCE_FIT
        }
    }

    fn synthetic(mc: &McSettings) -> Vec<OptionQuote> {
        let contracts: Vec<Contract> = [0.9, 1.0, 1.1]
            .iter()
            .map(|&k| Contract {
                maturity: 0.5,
                strike: k,
            })
            .collect();
        mc_call_prices(&truth(), &contracts, mc, &PathCache::new())
            .unwrap()
            .prices
            .iter()
            .map(|p| OptionQuote::new(p.maturity, p.strike, p.price).unwrap())
            .collect()
    }

    fn problem(max_iters: usize) -> CalibrationProblem {
        let mc = McSettings::new(10, 400, 17);
        CalibrationProblem {
            quotes: synthetic(&mc),
            initial: truth().with_vector(&truth().to_vector().map(|v| v * 1.2)),
            bounds: Bounds::default(),
            mc,
            optimizer: OptimizerSettings {
                max_iters,
                ..Default::default()
            },
        }
    }

    #[test]
    fn zero_budget_returns_initial_point() {
        let p = problem(0);
        let r = calibrate(&p).unwrap();
        assert_eq!(r.iterations, 0);
        assert_eq!(r.params, p.initial);
        assert_eq!(r.evaluations, 1);
        assert!(r.loss > 0.0);
    }

    #[test]
    fn loss_decreases_along_the_trace() {
        let p = problem(25);
        let mut seen = 0;
        let r = calibrate_with(&p, |_| seen += 1).unwrap();
        assert_eq!(seen, r.trace.len());
        assert!(r.trace.windows(2).all(|w| w[1].loss <= w[0].loss));
        let start = calibrate(&problem(0)).unwrap().loss;
        assert!(r.loss < start);
    }

    #[test]
    fn true_parameters_give_zero_loss() {
        let mut p = problem(0);
        p.initial = truth();
        assert_eq!(calibrate(&p).unwrap().loss, 0.0);
    }

    #[test]
    fn initial_point_outside_bounds_rejected() {
        let mut p = problem(5);
        p.initial.a = 10.0;
        assert!(calibrate(&p).is_err());
    }

    #[test]
    fn result_round_trips_through_toml() {
        let r = calibrate(&problem(3)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("result.toml");
        save_result(&r, &path).unwrap();
        assert_eq!(load_result(&path).unwrap(), r);
    }

    #[test]
    fn trace_csv_header() {
        let mut buf = Vec::new();
        write_trace_csv(&mut buf, &[]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap().trim(),
            "iteration,evaluations,loss,a,b,c,theta,eta,z0"
        );
    }
}
