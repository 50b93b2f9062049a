use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use serde::Serialize;

use super::{
    AlgebraArgs, CalibrateArgs, Cli, Command, Experiment, McArgs, ModelArgs, PriceArgs, RateArgs,
    RateKind, RdeArgs, SimulateArgs, SolverArgs,
};
use crate::algebra::verify::{exactness_checks, run_all, ExactnessReport, SuiteConfig};
use crate::error::{Error, Result};
use crate::iterated::rate::{
    hybrid_pointwise_study, rate_study, renormalisation_check, RateConfig, RateMethod,
};
use crate::leadlag::custom_lag_pl;
use crate::noise::{
    sample_batch, write_paths_csv, FbmSampler, Grid, NoiseSpec, PathColumns, RngPolicy,
};
use crate::pricing::{
    black_scholes_call, calibrate_with, load_quotes, mc_call_prices, save_result, write_quotes,
    Bounds, CalibrationProblem, Contract, McPrice, McSettings, OptimizerSettings, OptionQuote,
    PathCache, QHestonParams,
};
use crate::rde::experiments::{
    drift_discrimination, martingale_check, refinement_study, ExperimentConfig, RefinementStudy,
};
use crate::rde::{
    bs_sanity_system, qheston_pricing_system, qheston_test_system, solve_wong_zakai, Preset,
    QHestonPricing, RdeSystem, SolverConfig,
};
use crate::stats::LineFit;

/// Console summary and the list of failed invariant checks.
#[derive(Debug, Default, Clone)]
pub struct Outcome {
    pub lines: Vec<String>,
    pub failures: Vec<String>,
}

impl Outcome {
    fn say(&mut self, line: impl Into<String>) {
        self.lines.push(line.into());
    }

    fn check(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.failures.push(what.into());
        }
    }
}

pub(super) fn dispatch(cli: &Cli) -> Result<Outcome> {
    let seed = cli.common.seed;
    let dir = cli.common.out_dir.as_path();
    match &cli.command {
        Command::Simulate(a) => simulate(a, seed, dir),
        Command::AlgebraVerify(a) => algebra_verify(a, seed, dir),
        Command::RateStudy(a) => rate(a, seed, dir),
        Command::Rde(a) => rde(a, seed, dir),
        Command::Price(a) => price(a, seed, dir),
        Command::Calibrate(a) => calibrate(a, seed, dir),
    }
}

fn write_toml<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, toml::to_string(value)?)?;
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn simulate(a: &SimulateArgs, seed: u64, dir: &Path) -> Result<Outcome> {
    let grid = Grid::new(a.t_end, a.n)?;
    let sampler = FbmSampler::new(NoiseSpec::new(grid, a.hurst, a.rho, a.method)?);
    let rng = RngPolicy::new(seed);
    let mut out = Outcome::default();
    for (i, noise) in sample_batch(&sampler, &rng, 0, a.n_paths)
        .iter()
        .enumerate()
    {
        let mut cols = PathColumns::from_noise(noise);
        let lag = custom_lag_pl(&noise.x, grid, a.lag_fraction)?;
        let times = grid.times();
        cols.push("W_lead", noise.w.clone())?;
        cols.push("X_lag", times.iter().map(|&t| lag.value(t)).collect())?;
        let path = dir.join(format!("path_{i:04}.csv"));
        write_paths_csv(create(&path)?, &cols)?;
        out.say(format!("wrote {}", path.display()));
    }
    Ok(out)
}

#[derive(Serialize)]
struct AlgebraReport<'a> {
    passed: bool,
    exactness: &'a [ExactnessReport],
}

fn algebra_verify(a: &AlgebraArgs, seed: u64, dir: &Path) -> Result<Outcome> {
    let mut out = Outcome::default();
    let exact = a
        .exact_hurst
        .iter()
        .map(|&h| exactness_checks(h))
        .collect::<Result<Vec<_>>>()?;
    for r in &exact {
        out.say(format!(
            "exactness H={}: {} words, iajk {}, overweight rejected {}",
            r.hurst,
            r.words_checked,
            r.iajk
                .map_or("out of scope".to_string(), |ok| ok.to_string()),
            r.overweight_rejected
        ));
        out.check(
            r.passed(),
            format!("exactness at H={}: {:?}", r.hurst, r.failures),
        );
    }
    let cfg = SuiteConfig {
        rho: a.rho,
        method: a.method,
        n_paths: a.n_paths,
        grid: Grid::new(1.0, 1usize << a.mesh_exp)?,
        ..SuiteConfig::new(a.hurst, seed)
    };
    let suites = run_all(&cfg, a.holder_levels)?;
    let mut wr = csv::Writer::from_writer(create(&dir.join("checks.csv"))?);
    wr.write_record([
        "suite",
        "label",
        "mean",
        "stderr",
        "rms_diff",
        "rms_scale",
        "passed",
    ])?;
    for c in suites
        .chen
        .iter()
        .chain(&suites.shuffle)
        .chain(&suites.backward)
    {
        wr.write_record([
            c.suite.clone(),
            c.label.clone(),
            c.mean.to_string(),
            c.stderr.to_string(),
            c.rms_diff.to_string(),
            c.rms_scale.to_string(),
            c.passed.to_string(),
        ])?;
        out.check(c.passed, format!("{} {}", c.suite, c.label));
    }
    wr.flush()?;
    let mut wr = csv::Writer::from_writer(create(&dir.join("holder.csv"))?);
    wr.write_record(["word", "weight", "slope", "passed"])?;
    for h in &suites.holder {
        wr.write_record([
            h.word.clone(),
            h.weight.to_string(),
            h.slope.to_string(),
            h.passed.to_string(),
        ])?;
        out.check(h.passed, format!("holder scaling of {}", h.word));
    }
    wr.flush()?;
    let n = suites.chen.len() + suites.shuffle.len() + suites.backward.len() + suites.holder.len();
    out.say(format!(
        "{n} statistical checks, {} failed",
        out.failures.len()
    ));
    write_toml(
        &dir.join("algebra.toml"),
        &AlgebraReport {
            passed: out.failures.is_empty(),
            exactness: &exact,
        },
    )?;
    Ok(out)
}

#[derive(Serialize)]
struct FitReport {
    kind: &'static str,
    method: &'static str,
    target: f64,
    fit: LineFit,
    tol: Option<f64>,
    passed: Option<bool>,
}

fn rate(a: &RateArgs, seed: u64, dir: &Path) -> Result<Outcome> {
    let mut out = Outcome::default();
    let (kind, method, fit) = match a.kind {
        RateKind::Holder => {
            let cfg = RateConfig {
                alpha: a.alpha.unwrap_or(a.hurst),
                rho: a.rho,
                levels: a.levels.clone(),
                n_paths: a.n_paths,
                oracle_factor: a.oracle_factor,
                t_end: a.t_end,
                ..RateConfig::new(a.method, a.hurst, a.m, seed)
            };
            let st = rate_study(&cfg)?;
            st.write_csv(create(&dir.join("rates.csv"))?)?;
            for r in &st.rows {
                out.say(format!(
                    "mesh {:.3e}  error {:.4e} ± {:.1e}",
                    r.mesh, r.mean_error, r.stderr
                ));
            }
            ("holder", a.method.name(), st.fit)
        }
        RateKind::Pointwise => {
            let st = hybrid_pointwise_study(a.hurst, &a.levels, a.n_paths, a.oracle_factor, seed)?;
            let mut wr = csv::Writer::from_writer(create(&dir.join("rates.csv"))?);
            wr.write_record(["mesh", "sup_rms", "terminal_rms"])?;
            for r in &st.rows {
                wr.write_record([
                    r.mesh.to_string(),
                    r.sup_rms.to_string(),
                    r.terminal_rms.to_string(),
                ])?;
                out.say(format!("mesh {:.3e}  sup rms {:.4e}", r.mesh, r.sup_rms));
            }
            wr.flush()?;
            ("pointwise", "hybrid", st.fit)
        }
        RateKind::Renormalisation => return renormalisation(a, seed, dir),
    };
    out.say(format!(
        "slope {:.4} (95% CI {:.4}..{:.4}), target {}",
        fit.slope, fit.ci_low, fit.ci_high, a.hurst
    ));
    // divergence runs have no target rate
    let checked = a
        .tol
        .filter(|_| a.kind != RateKind::Holder || a.method != RateMethod::NoLag);
    let passed = checked.map(|tol| (fit.slope - a.hurst).abs() <= tol);
    if let Some(ok) = passed {
        out.check(
            ok,
            format!(
                "slope {:.4} outside {} ± {}",
                fit.slope,
                a.hurst,
                checked.unwrap()
            ),
        );
    }
    write_toml(
        &dir.join("fit.toml"),
        &FitReport {
            kind,
            method,
            target: a.hurst,
            fit,
            tol: checked,
            passed,
        },
    )?;
    Ok(out)
}

fn renormalisation(a: &RateArgs, seed: u64, dir: &Path) -> Result<Outcome> {
    let mut out = Outcome::default();
    let grid = Grid::new(1.0, a.grid_n)?;
    let run = |lagged| {
        renormalisation_check(
            a.hurst, a.rho, grid, a.width, a.s, a.t, a.n_paths, lagged, seed,
        )
    };
    let (lagged, plain) = (run(true)?, run(false)?);
    for c in [&lagged, &plain] {
        out.say(format!(
            "lagged={}  mean {:.4e} ± {:.2e}  z {:.2}",
            c.lagged, c.summary.mean, c.summary.stderr, c.z_score
        ));
    }
    out.check(
        lagged.z_score <= 3.0,
        format!("lagged mean is {:.2} SE from zero", lagged.z_score),
    );
    #[derive(Serialize)]
    struct Report {
        lagged: crate::iterated::rate::RenormalisationCheck,
        unlagged: crate::iterated::rate::RenormalisationCheck,
    }
    write_toml(
        &dir.join("renormalisation.toml"),
        &Report {
            lagged,
            unlagged: plain,
        },
    )?;
    Ok(out)
}

fn solver_config(s: &SolverArgs) -> SolverConfig {
    SolverConfig {
        ratio: s.ratio,
        integrator: s.integrator,
        control: s.control,
        lag_fraction: s.lag_fraction,
        ..SolverConfig::default()
    }
}

fn experiment_config(a: &RdeArgs, seed: u64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(seed);
    cfg.eps = a.eps.clone();
    cfg.n_paths = a.n_paths;
    cfg.hurst = a.hurst;
    cfg.rho = a.rho;
    cfg.solver = solver_config(&a.solver);
    if let Some(g) = a.gamma0 {
        cfg.params.gamma0 = g;
    }
    if let Some(g) = a.gamma1 {
        cfg.params.gamma1 = g;
    }
    cfg
}

fn monotone_decreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|p| p[1] < p[0])
}

fn rde(a: &RdeArgs, seed: u64, dir: &Path) -> Result<Outcome> {
    if a.experiment != Experiment::Trajectory && a.preset != Preset::QhestonTest {
        return Err(Error::param(
            "preset",
            "only `trajectory` runs on presets other than qheston-test",
        ));
    }
    let cfg = experiment_config(a, seed);
    let mut out = Outcome::default();
    match a.experiment {
        Experiment::Trajectory => trajectory(a, &cfg, dir, &mut out)?,
        Experiment::Refinement => {
            let st = refinement_study(&cfg)?;
            st.write_csv(create(&dir.join("refinement.csv"))?)?;
            report_rows(&st, &mut out);
            let exp: Vec<f64> = st.rows.iter().map(|r| r.exp_gap).collect();
            let s: Vec<f64> = st.rows.iter().filter_map(|r| r.s_gap).collect();
            let z: Vec<f64> = st.rows.iter().filter_map(|r| r.z_gap).collect();
            out.check(
                monotone_decreasing(&exp),
                "exponential-martingale gap does not decrease",
            );
            out.check(
                monotone_decreasing(&s),
                "S refinement gap does not decrease",
            );
            out.check(
                monotone_decreasing(&z),
                "Z refinement gap does not decrease",
            );
        }
        Experiment::NoLag => {
            let plain = refinement_study(&cfg.clone().no_lag())?;
            let equal = refinement_study(&cfg.clone().no_lag().equal_gammas())?;
            plain.write_csv(create(&dir.join("no_lag.csv"))?)?;
            equal.write_csv(create(&dir.join("no_lag_equal_gammas.csv"))?)?;
            out.say("without lag:");
            report_rows(&plain, &mut out);
            out.say("without lag, equal gammas:");
            report_rows(&equal, &mut out);
            let sg = plain.growth(|r| r.s_gap);
            let zg = plain.growth(|r| r.z_gap);
            let eg = equal.growth(|r| r.z_gap);
            out.say(format!(
                "growth S {sg:.3?}  Z {zg:.3?}  Z (equal gammas) {eg:.3?}"
            ));
            out.check(
                sg.iter().chain(&zg).all(|&g| g >= 1.5),
                "refinement gaps grow by less than 1.5",
            );
            out.check(
                eg.iter().all(|&g| g < 1.5),
                "Z gap still grows with equal gammas",
            );
            let below = plain
                .rows
                .iter()
                .zip(&equal.rows)
                .filter_map(|(p, e)| Some((p.z_gap?, e.z_gap?)))
                .all(|(p, e)| e < p);
            out.check(
                below,
                "equal-gamma Z gap is not below the distinct-gamma one",
            );
        }
        Experiment::Drift => {
            let rows = drift_discrimination(&cfg)?;
            let mut wr = csv::Writer::from_writer(create(&dir.join("drift.csv"))?);
            wr.write_record(["variant", "mean_gap", "stderr", "n"])?;
            for r in &rows {
                wr.write_record([
                    r.label().to_string(),
                    r.gap.mean.to_string(),
                    r.gap.stderr.to_string(),
                    r.gap.n.to_string(),
                ])?;
                out.say(format!(
                    "{:<15} {:.4e} ± {:.1e}",
                    r.label(),
                    r.gap.mean,
                    r.gap.stderr
                ));
            }
            wr.flush()?;
            let full = rows[0].gap.mean;
            out.check(
                rows[1..].iter().all(|r| full < r.gap.mean),
                "full drift is not the closest to the exponential martingale",
            );
        }
        Experiment::Martingale => {
            let m = martingale_check(&cfg)?;
            out.say(format!(
                "eps {:e}: E[S_T] = {:.5} ± {:.5}, z {:.2}",
                m.eps, m.s_terminal.mean, m.s_terminal.stderr, m.z_score
            ));
            out.check(
                m.z_score <= a.z_max,
                format!("E[S_T] is {:.2} SE from S0", m.z_score),
            );
            write_toml(&dir.join("martingale.toml"), &m)?;
        }
    }
    Ok(out)
}

fn report_rows(st: &RefinementStudy, out: &mut Outcome) {
    for r in &st.rows {
        out.say(format!(
            "eps {:e}  exp gap {:.4}  S gap {}  Z gap {}  blow-ups {}",
            r.eps,
            r.exp_gap,
            r.s_gap.map_or("-".into(), |g| format!("{g:.4}")),
            r.z_gap.map_or("-".into(), |g| format!("{g:.4}")),
            r.blow_ups
        ));
    }
}

fn trajectory(a: &RdeArgs, cfg: &ExperimentConfig, dir: &Path, out: &mut Outcome) -> Result<()> {
    let sys: Box<dyn RdeSystem> = match a.preset {
        Preset::QhestonTest => Box::new(qheston_test_system(cfg.params)?),
        Preset::QhestonPricing => {
            let p = QHestonParams {
                hurst: a.hurst,
                ..crate::pricing::REFERENCE_FIT
            };
            Box::new(qheston_pricing_system(QHestonPricing::new(
                p.vol()?,
                p.theta,
                p.eta,
                p.lambda,
                1.0,
                p.z0,
            )?)?)
        }
        Preset::BsSanity => Box::new(bs_sanity_system(a.bs_sigma, 1.0)?),
    };
    let finest = *cfg.eps.last().ok_or(Error::Empty("eps levels"))?;
    let fine = Grid::with_mesh(cfg.t_end, finest)?;
    let spec = NoiseSpec::new(fine, cfg.hurst, cfg.rho, crate::noise::NoiseMethod::Hybrid)?;
    let noise = FbmSampler::new(spec).sample(&RngPolicy::new(cfg.seed), a.path);
    for (l, &e) in cfg.eps.iter().enumerate() {
        let factor = (e / finest).round() as usize;
        let sol = solve_wong_zakai(sys.as_ref(), &noise.subsample(factor)?, &cfg.solver)?;
        let path = dir.join(format!("trajectory_{l}.csv"));
        sol.write_csv(create(&path)?)?;
        out.say(format!(
            "eps {e:e}: S_T = {:.6}, blew up {}",
            sol.s_terminal(),
            sol.diagnostics.blew_up
        ));
    }
    Ok(())
}

fn params_of(m: &ModelArgs) -> QHestonParams {
    QHestonParams {
        a: m.a,
        b: m.b,
        c: m.c,
        theta: m.theta,
        eta: m.eta,
        z0: m.z0,
        lambda: m.lambda,
        hurst: m.hurst,
    }
}

fn mc_settings(m: &McArgs, seed: u64) -> McSettings {
    let mut mc = McSettings::new(m.n_steps, m.n_paths, seed);
    mc.s0 = m.s0;
    mc.solver.ratio = m.ratio;
    mc.solver.lag_fraction = m.lag_fraction;
    mc
}

fn write_prices(path: &Path, prices: &[McPrice], bs_sigma: Option<f64>, s0: f64) -> Result<()> {
    let mut wr = csv::Writer::from_writer(create(path)?);
    let mut header = vec!["maturity", "grid_maturity", "strike", "price", "stderr"];
    if bs_sigma.is_some() {
        header.extend(["bs_price", "bs_z"]);
    }
    wr.write_record(&header)?;
    for p in prices {
        let mut row = vec![
            p.maturity.to_string(),
            p.grid_maturity.to_string(),
            p.strike.to_string(),
            p.price.to_string(),
            p.stderr.to_string(),
        ];
        if let Some(sig) = bs_sigma {
            let bs = black_scholes_call(s0, p.strike, p.grid_maturity, sig);
            row.push(bs.to_string());
            row.push(((p.price - bs) / p.stderr).to_string());
        }
        wr.write_record(&row)?;
    }
    wr.flush()?;
    Ok(())
}

fn price(a: &PriceArgs, seed: u64, dir: &Path) -> Result<Outcome> {
    let params = params_of(&a.model);
    let mc = mc_settings(&a.mc, seed);
    let contracts: Vec<Contract> = match &a.quotes {
        Some(path) => load_quotes(path)?
            .iter()
            .map(OptionQuote::contract)
            .collect(),
        None => a
            .maturities
            .iter()
            .flat_map(|&maturity| {
                a.strikes
                    .iter()
                    .map(move |&strike| Contract { maturity, strike })
            })
            .collect(),
    };
    let report = mc_call_prices(&params, &contracts, &mc, &PathCache::new())?;
    let mut out = Outcome::default();
    let bs_sigma = (params.a == 0.0).then(|| params.c.sqrt());
    write_prices(&dir.join("prices.csv"), &report.prices, bs_sigma, mc.s0)?;
    let quotes = report
        .prices
        .iter()
        .map(|p| OptionQuote::new(p.maturity, p.strike, p.price))
        .collect::<Result<Vec<_>>>()?;
    write_quotes(create(&dir.join("model_quotes.csv"))?, &quotes)?;

    let mut wr = csv::Writer::from_writer(create(&dir.join("forwards.csv"))?);
    wr.write_record(["maturity", "mean", "stderr", "z"])?;
    for (t, s) in &report.forwards {
        let z = (s.mean - mc.s0) / s.stderr;
        wr.write_record([
            t.to_string(),
            s.mean.to_string(),
            s.stderr.to_string(),
            z.to_string(),
        ])?;
    }
    wr.flush()?;

    for p in &report.prices {
        out.say(format!(
            "T={:<6} K={:<5} C={:.6} ± {:.1e}",
            p.maturity, p.strike, p.price, p.stderr
        ));
    }
    let fz = report.max_forward_z(mc.s0);
    out.say(format!("max forward z-score {fz:.2}"));
    out.check(fz <= a.z_max, format!("forward is {fz:.2} SE from S0"));
    if let Some(sig) = bs_sigma {
        for p in &report.prices {
            let z = (p.price - black_scholes_call(mc.s0, p.strike, p.grid_maturity, sig)).abs()
                / p.stderr;
            out.check(
                z <= a.z_max,
                format!(
                    "T={} K={} is {z:.2} SE from Black–Scholes",
                    p.maturity, p.strike
                ),
            );
        }
    }
    Ok(out)
}

fn calibrate(a: &CalibrateArgs, seed: u64, dir: &Path) -> Result<Outcome> {
    let take6 = |v: &[f64], name: &'static str| -> Result<[f64; 6]> {
        v.try_into()
            .map_err(|_| Error::param(name, format!("need 6 values, got {}", v.len())))
    };
    let problem = CalibrationProblem {
        quotes: load_quotes(&a.quotes)?,
        initial: params_of(&a.model),
        bounds: Bounds {
            lower: take6(&a.lower, "lower")?,
            upper: take6(&a.upper, "upper")?,
        },
        mc: mc_settings(&a.mc, seed),
        optimizer: OptimizerSettings {
            max_iters: a.max_iters,
            x_tol: a.x_tol,
            f_tol: a.f_tol,
            initial_step: a.initial_step,
            penalty: a.penalty,
        },
    };
    let mut trace = csv::Writer::from_writer(File::create(dir.join("trace.csv"))?);
    let mut header = vec!["iteration", "evaluations", "loss"];
    header.extend(crate::pricing::PARAM_NAMES);
    trace.write_record(&header)?;
    trace.flush()?;
    let mut trace_err = None;
    let result = calibrate_with(&problem, |e| {
        let mut row = vec![
            e.iteration.to_string(),
            e.evaluations.to_string(),
            format!("{:e}", e.loss),
        ];
        row.extend(e.params.iter().map(|p| p.to_string()));
        if let Err(err) = trace
            .write_record(&row)
            .and_then(|_| trace.flush().map_err(Into::into))
        {
            trace_err.get_or_insert(err);
        }
    })?;
    if let Some(e) = trace_err {
        return Err(e.into());
    }
    save_result(&result, dir.join("calibration.toml"))?;
    let fitted = mc_call_prices(
        &result.params,
        &problem
            .quotes
            .iter()
            .map(OptionQuote::contract)
            .collect::<Vec<_>>(),
        &problem.mc,
        &PathCache::new(),
    )?;
    write_prices(
        &dir.join("fitted_prices.csv"),
        &fitted.prices,
        None,
        problem.mc.s0,
    )?;

    let mut out = Outcome::default();
    out.say(format!(
        "loss {:.4e} after {} iterations ({} evaluations), converged {}",
        result.loss, result.iterations, result.evaluations, result.converged
    ));
    for (n, v) in crate::pricing::PARAM_NAMES
        .iter()
        .zip(result.params.to_vector())
    {
        out.say(format!("{n:>6} = {v:.6}"));
    }
    if result.diagnostics.below_intrinsic > 0 {
        out.say(format!(
            "{} quotes lie below intrinsic value",
            result.diagnostics.below_intrinsic
        ));
    }
    Ok(out)
}
