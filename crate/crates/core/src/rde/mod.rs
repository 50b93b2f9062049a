//! Wong–Zakai solver for the price/volatility system
//!
//! ```text
//! dS = σ(S,V,t) dW + g(S,V,t) dt
//! dV = τ(S,V,t) dX + ς(S,V,t) dW + h(S,V,t) dt
//! ```
//!
//! The noise is replaced by a lead `W` and a lagged `X`, and the resulting
//! ODE is integrated with a fixed step that is a fraction of the noise mesh.

mod drift;
pub mod experiments;
mod systems;

use std::io::Write;

use serde::{Deserialize, Serialize};

pub use drift::{
    build_martingale_drift, martingale_drift, sigma_gradient, DriftTerms, MartingaleDrift,
};
pub use systems::{
    bs_sanity_system, printed_test_drift, qheston_pricing_system, qheston_test_system, signed_pow,
    BlackScholes, Preset, QHestonPricing, QHestonTest, QuadraticVol, TestSystemParams,
};

use crate::error::{Error, Result};
use crate::leadlag::{custom_lag_pl, lead_pl, MollifiedGrid};
use crate::noise::{Grid, JointNoise};

/// Coefficients of the system, with one Brownian and one fractional driver.
///
/// Evaluation must be deterministic and defined on the whole state space.
pub trait RdeSystem: Send + Sync {
    /// Number of volatility factors `m_v`.
    fn dim_v(&self) -> usize;
    fn s0(&self) -> f64;
    fn v0(&self) -> Vec<f64>;
    /// Coefficient of `dW` in the price equation.
    fn sigma(&self, s: f64, v: &[f64], t: f64) -> f64;
    /// Coefficient of `dX` in the factor equation.
    fn tau(&self, s: f64, v: &[f64], t: f64, out: &mut [f64]);
    /// Coefficient of `dW` in the factor equation.
    fn varsigma(&self, s: f64, v: &[f64], t: f64, out: &mut [f64]);
    /// User drift `g` of the price.
    fn drift_s(&self, _s: f64, _v: &[f64], _t: f64) -> f64 {
        0.0
    }
    /// Drift `h` of the factors.
    fn drift_v(&self, _s: f64, _v: &[f64], _t: f64, out: &mut [f64]) {
        out.fill(0.0);
    }
    /// Analytic `∂_S σ` (returned) and `∂_V σ` (written to `dv`), if known.
    fn sigma_gradient(&self, _s: f64, _v: &[f64], _t: f64, _dv: &mut [f64]) -> Option<f64> {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Integrator {
    Rk4,
    Heun,
}

impl std::str::FromStr for Integrator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rk4" => Ok(Integrator::Rk4),
            "heun" => Ok(Integrator::Heun),
            _ => Err(Error::param(
                "integrator",
                format!("unknown integrator `{s}`"),
            )),
        }
    }
}

/// Smooth approximation of the noise fed to the ODE.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Control {
    /// Piecewise-linear lead `W`, `X` delayed by `lag_fraction · ε`.
    PiecewiseLinear,
    /// Mollified `W`, mollified `X` delayed by `2ε`; ignores `lag_fraction`.
    Mollifier,
}

impl std::str::FromStr for Control {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "piecewise-linear" | "pl" => Ok(Control::PiecewiseLinear),
            "mollifier" => Ok(Control::Mollifier),
            _ => Err(Error::param("control", format!("unknown control `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Solver steps per noise cell; the solver step is `ε / ratio`.
    pub ratio: usize,
    pub integrator: Integrator,
    pub lag_fraction: f64,
    pub control: Control,
    /// Paths whose state exceeds this magnitude are aborted.
    pub blow_up: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            ratio: 10,
            integrator: Integrator::Rk4,
            lag_fraction: 1.2,
            control: Control::PiecewiseLinear,
            blow_up: 1e12,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ratio < 2 {
            return Err(Error::param(
                "ratio",
                "the solver needs at least two steps per noise cell",
            ));
        }
        if !(self.lag_fraction >= 0.0 && self.lag_fraction.is_finite()) {
            return Err(Error::param("lag_fraction", "must be non-negative"));
        }
        if !(self.blow_up > 0.0) {
            return Err(Error::param("blow_up", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Largest change of any state component over one solver step.
    pub max_step_change: f64,
    pub blew_up: bool,
    pub blow_up_time: Option<f64>,
}

/// Trajectory recorded at the noise grid points. After a blow-up the
/// remaining entries are `NaN`.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionPath {
    pub times: Vec<f64>,
    pub s: Vec<f64>,
    /// `v[i][k]`: factor `i` at time `k`.
    pub v: Vec<Vec<f64>>,
    pub diagnostics: Diagnostics,
}

impl SolutionPath {
    pub fn s_terminal(&self) -> f64 {
        *self.s.last().unwrap()
    }

    pub fn v_terminal(&self, i: usize) -> f64 {
        *self.v[i].last().unwrap()
    }

    /// CSV `t,S,V` (or `t,S,V1,..,Vm` for several factors).
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string(), "S".to_string()];
        match self.v.len() {
            1 => header.push("V".into()),
            m => header.extend((1..=m).map(|i| format!("V{i}"))),
        }
        wr.write_record(&header)?;
        for k in 0..self.times.len() {
            let mut row = vec![
                format!("{:.16e}", self.times[k]),
                format!("{:.16e}", self.s[k]),
            ];
            row.extend(self.v.iter().map(|c| format!("{:.16e}", c[k])));
            wr.write_record(&row)?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Control derivatives `(Ẇ, Ẋ)` at the start, middle and end of each step.
enum Rates {
    /// Constant on each solver step.
    Constant { dw: Vec<f64>, dx: Vec<f64> },
    /// Values at the solver grid points; midpoints by averaging.
    Nodal { dw: Vec<f64>, dx: Vec<f64> },
}

impl Rates {
    #[inline]
    fn at(&self, j: usize) -> [(f64, f64); 3] {
        match self {
            Rates::Constant { dw, dx } => [(dw[j], dx[j]); 3],
            Rates::Nodal { dw, dx } => {
                let a = (dw[j], dx[j]);
                let b = (dw[j + 1], dx[j + 1]);
                [a, (0.5 * (a.0 + b.0), 0.5 * (a.1 + b.1)), b]
            }
        }
    }
}

fn control_rates(noise: &JointNoise, cfg: &SolverConfig) -> Result<Rates> {
    let g = noise.grid;
    let r = cfg.ratio;
    let steps = g.n * r;
    let h = g.dt() / r as f64;
    let fine = Grid::new(g.t_end, steps)?;
    match cfg.control {
        Control::PiecewiseLinear => {
            let w = lead_pl(&noise.w, g)?;
            let x = custom_lag_pl(&noise.x, g, cfg.lag_fraction)?;
            let mut dw = Vec::with_capacity(steps);
            let mut dx = Vec::with_capacity(steps);
            let (mut w0, mut x0) = (w.value(0.0), x.value(0.0));
            for j in 0..steps {
                let t1 = fine.time(j + 1);
                let (w1, x1) = (w.value(t1), x.value(t1));
                dw.push((w1 - w0) / h);
                dx.push((x1 - x0) / h);
                (w0, x0) = (w1, x1);
            }
            Ok(Rates::Constant { dw, dx })
        }
        Control::Mollifier => {
            // the piecewise-linear paths sampled on the solver grid are exact
            // inputs for the hat-function mollifier
            let up = |v: &[f64]| -> Result<Vec<f64>> {
                let p = lead_pl(v, g)?;
                Ok((0..=steps).map(|j| p.value(fine.time(j))).collect())
            };
            let mg = MollifiedGrid::new(r, steps, h)?;
            Ok(Rates::Nodal {
                dw: mg.derivatives(&up(&noise.w)?, 0)?,
                dx: mg.derivatives(&up(&noise.x)?, 2 * r)?,
            })
        }
    }
}

struct Field<'a, S: ?Sized> {
    sys: &'a S,
    m: usize,
    price: bool,
    tau: Vec<f64>,
    vs: Vec<f64>,
    hv: Vec<f64>,
}

impl<S: RdeSystem + ?Sized> Field<'_, S> {
    #[inline]
    fn eval(&mut self, t: f64, y: &[f64], (wd, xd): (f64, f64), out: &mut [f64]) {
        let (s, v) = (y[0], &y[1..]);
        out[0] = if self.price {
            self.sys.sigma(s, v, t) * wd + self.sys.drift_s(s, v, t)
        } else {
            0.0
        };
        if self.m > 0 {
            self.sys.tau(s, v, t, &mut self.tau);
            self.sys.varsigma(s, v, t, &mut self.vs);
            self.sys.drift_v(s, v, t, &mut self.hv);
            for i in 0..self.m {
                out[1 + i] = self.tau[i] * xd + self.vs[i] * wd + self.hv[i];
            }
        }
    }
}

/// Integrates the ODE driven by the smoothed `noise` on the mesh `ε/ratio`,
/// where `ε` is the noise mesh.
pub fn solve_wong_zakai<S: RdeSystem + ?Sized>(
    sys: &S,
    noise: &JointNoise,
    cfg: &SolverConfig,
) -> Result<SolutionPath> {
    solve(sys, noise, cfg, true)
}

/// Integrates the factor equation only, holding `S` at `S₀` inside the
/// coefficients; the returned price column is `NaN`. Valid when `τ`, `ς`
/// and `h` do not depend on `S`.
pub fn solve_factors<S: RdeSystem + ?Sized>(
    sys: &S,
    noise: &JointNoise,
    cfg: &SolverConfig,
) -> Result<SolutionPath> {
    let mut sol = solve(sys, noise, cfg, false)?;
    sol.s.fill(f64::NAN);
    Ok(sol)
}

fn solve<S: RdeSystem + ?Sized>(
    sys: &S,
    noise: &JointNoise,
    cfg: &SolverConfig,
    price: bool,
) -> Result<SolutionPath> {
    cfg.validate()?;
    let m = sys.dim_v();
    let v0 = sys.v0();
    if v0.len() != m {
        return Err(Error::LengthMismatch {
            expected: m,
            actual: v0.len(),
        });
    }
    let g = noise.grid;
    let r = cfg.ratio;
    let h = g.dt() / r as f64;
    let rates = control_rates(noise, cfg)?;
    let dim = m + 1;
    let mut field = Field {
        sys,
        m,
        price,
        tau: vec![0.0; m],
        vs: vec![0.0; m],
        hv: vec![0.0; m],
    };
    let mut y = Vec::with_capacity(dim);
    y.push(sys.s0());
    y.extend_from_slice(&v0);
    let mut s_path = Vec::with_capacity(g.n + 1);
    let mut v_path = vec![Vec::with_capacity(g.n + 1); m];
    let record = |y: &[f64], s_path: &mut Vec<f64>, v_path: &mut Vec<Vec<f64>>| {
        s_path.push(y[0]);
        for i in 0..m {
            v_path[i].push(y[1 + i]);
        }
    };
    record(&y, &mut s_path, &mut v_path);

    let mut k1 = vec![0.0; dim];
    let mut k2 = vec![0.0; dim];
    let mut k3 = vec![0.0; dim];
    let mut k4 = vec![0.0; dim];
    let mut tmp = vec![0.0; dim];
    let mut diag = Diagnostics {
        max_step_change: 0.0,
        blew_up: false,
        blow_up_time: None,
    };
    'cells: for k in 0..g.n {
        for sub in 0..r {
            let j = k * r + sub;
            let t = (j as f64) * h;
            let [c0, c1, c2] = rates.at(j);
            match cfg.integrator {
                Integrator::Rk4 => {
                    field.eval(t, &y, c0, &mut k1);
                    for i in 0..dim {
                        tmp[i] = y[i] + 0.5 * h * k1[i];
                    }
                    field.eval(t + 0.5 * h, &tmp, c1, &mut k2);
                    for i in 0..dim {
                        tmp[i] = y[i] + 0.5 * h * k2[i];
                    }
                    field.eval(t + 0.5 * h, &tmp, c1, &mut k3);
                    for i in 0..dim {
                        tmp[i] = y[i] + h * k3[i];
                    }
                    field.eval(t + h, &tmp, c2, &mut k4);
                    for i in 0..dim {
                        let d = h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                        y[i] += d;
                        diag.max_step_change = diag.max_step_change.max(d.abs());
                    }
                }
                Integrator::Heun => {
                    field.eval(t, &y, c0, &mut k1);
                    for i in 0..dim {
                        tmp[i] = y[i] + h * k1[i];
                    }
                    field.eval(t + h, &tmp, c2, &mut k2);
                    for i in 0..dim {
                        let d = 0.5 * h * (k1[i] + k2[i]);
                        y[i] += d;
                        diag.max_step_change = diag.max_step_change.max(d.abs());
                    }
                }
            }
            if y.iter().any(|v| !v.is_finite() || v.abs() > cfg.blow_up) {
                diag.blew_up = true;
                diag.blow_up_time = Some(t + h);
                break 'cells;
            }
        }
        record(&y, &mut s_path, &mut v_path);
    }
    while s_path.len() < g.n + 1 {
        s_path.push(f64::NAN);
        for c in v_path.iter_mut() {
            c.push(f64::NAN);
        }
    }
    Ok(SolutionPath {
        times: g.times(),
        s: s_path,
        v: v_path,
        diagnostics: diag,
    })
}

/// `S_k = S₀ exp{Σ_{i<k} v(Z_i) ΔW_i − ½ Σ_{i<k} v(Z_i)² Δt}`, left-point.
pub fn exp_martingale_price(
    z: &[f64],
    dw: &[f64],
    dt: f64,
    vol: &QuadraticVol,
    s0: f64,
) -> Result<Vec<f64>> {
    if z.len() != dw.len() + 1 {
        return Err(Error::LengthMismatch {
            expected: dw.len() + 1,
            actual: z.len(),
        });
    }
    let mut out = Vec::with_capacity(z.len());
    let mut log = 0.0;
    out.push(s0);
    for (zi, d) in z.iter().zip(dw) {
        let var = vol.variance(*zi);
        log += var.sqrt() * d - 0.5 * var * dt;
        out.push(s0 * log.exp());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{FbmSampler, NoiseMethod, NoiseSpec, RngPolicy};

    struct UnitDrift;

    impl RdeSystem for UnitDrift {
        fn dim_v(&self) -> usize {
            1
        }
        fn s0(&self) -> f64 {
            2.0
        }
        fn v0(&self) -> Vec<f64> {
            vec![0.5]
        }
        fn sigma(&self, _: f64, _: &[f64], _: f64) -> f64 {
            0.0
        }
        fn tau(&self, _: f64, _: &[f64], _: f64, out: &mut [f64]) {
            out[0] = 0.0;
        }
        fn varsigma(&self, _: f64, _: &[f64], _: f64, out: &mut [f64]) {
            out[0] = 0.0;
        }
        fn drift_s(&self, _: f64, _: &[f64], _: f64) -> f64 {
            1.0
        }
    }

    fn noise(n: usize, h: f64, rho: f64, seed: u64) -> JointNoise {
        let g = Grid::new(1.0, n).unwrap();
        FbmSampler::new(NoiseSpec::new(g, h, rho, NoiseMethod::Hybrid).unwrap())
            .sample(&RngPolicy::new(seed), 0)
    }

    #[test]
    fn pure_drift_is_linear() {
        let nz = noise(50, 0.3, 0.5, 1);
        for integrator in [Integrator::Rk4, Integrator::Heun] {
            for control in [Control::PiecewiseLinear, Control::Mollifier] {
                let cfg = SolverConfig {
                    integrator,
                    control,
                    ..Default::default()
                };
                let sol = solve_wong_zakai(&UnitDrift, &nz, &cfg).unwrap();
                for (t, s) in sol.times.iter().zip(&sol.s) {
                    assert!((s - 2.0 - t).abs() < 1e-12);
                }
                assert!(sol.v[0].iter().all(|&v| v == 0.5));
            }
        }
    }

    #[test]
    fn black_scholes_matches_exponential_of_w() {
        // Stratonovich dS = σ S ∘ dW − ½σ² S dt has S = exp(σW − ½σ²t),
        // and the piecewise-linear ODE reproduces it at the knots.
        let nz = noise(200, 0.3, 1.0, 4);
        let sys = bs_sanity_system(0.3, 1.0).unwrap();
        let sol = solve_wong_zakai(&sys, &nz, &SolverConfig::default()).unwrap();
        for (k, s) in sol.s.iter().enumerate() {
            let exact = (0.3 * nz.w[k] - 0.045 * nz.grid.time(k)).exp();
            assert!((s - exact).abs() < 1e-8 * exact, "{k}");
        }
    }

    #[test]
    fn factor_driven_by_w_only_is_closed_form() {
        // dZ = Z ∘ dW: Z = Z₀ e^W, regardless of the lag on X
        struct Geo;
        impl RdeSystem for Geo {
            fn dim_v(&self) -> usize {
                1
            }
            fn s0(&self) -> f64 {
                1.0
            }
            fn v0(&self) -> Vec<f64> {
                vec![1.5]
            }
            fn sigma(&self, _: f64, _: &[f64], _: f64) -> f64 {
                0.0
            }
            fn tau(&self, _: f64, _: &[f64], _: f64, out: &mut [f64]) {
                out[0] = 0.0;
            }
            fn varsigma(&self, _: f64, v: &[f64], _: f64, out: &mut [f64]) {
                out[0] = v[0];
            }
        }
        let nz = noise(100, 0.2, 0.8, 2);
        let sol = solve_wong_zakai(&Geo, &nz, &SolverConfig::default()).unwrap();
        for (k, z) in sol.v[0].iter().enumerate() {
            assert!((z - 1.5 * nz.w[k].exp()).abs() < 1e-8);
        }
    }

    #[test]
    fn factor_only_solve_matches_joint_solve() {
        let nz = noise(64, 0.1, 0.8, 6);
        let sys = qheston_test_system(TestSystemParams::default()).unwrap();
        let cfg = SolverConfig::default();
        let joint = solve_wong_zakai(&sys, &nz, &cfg).unwrap();
        let alone = solve_factors(&sys, &nz, &cfg).unwrap();
        assert_eq!(joint.v, alone.v);
        assert!(alone.s.iter().all(|s| s.is_nan()));
    }

    #[test]
    fn blow_up_is_flagged() {
        struct Explode;
        impl RdeSystem for Explode {
            fn dim_v(&self) -> usize {
                0
            }
            fn s0(&self) -> f64 {
                2.0
            }
            fn v0(&self) -> Vec<f64> {
                vec![]
            }
            fn sigma(&self, _: f64, _: &[f64], _: f64) -> f64 {
                0.0
            }
            fn tau(&self, _: f64, _: &[f64], _: f64, _: &mut [f64]) {}
            fn varsigma(&self, _: f64, _: &[f64], _: f64, _: &mut [f64]) {}
            fn drift_s(&self, s: f64, _: &[f64], _: f64) -> f64 {
                s * s
            }
        }
        let nz = noise(20, 0.3, 1.0, 0);
        let sol = solve_wong_zakai(&Explode, &nz, &SolverConfig::default()).unwrap();
        assert!(sol.diagnostics.blew_up);
        assert!(sol.s_terminal().is_nan());
        let t = sol.diagnostics.blow_up_time.unwrap();
        // exact blow-up at t = 1/S₀
        assert!(t > 0.45 && t <= 0.55, "{t}");
    }

    #[test]
    fn ratio_below_two_rejected() {
        let nz = noise(10, 0.3, 1.0, 0);
        let cfg = SolverConfig {
            ratio: 1,
            ..Default::default()
        };
        assert!(solve_wong_zakai(&UnitDrift, &nz, &cfg).is_err());
    }

    #[test]
    fn exp_martingale_constant_vol() {
        let vol = QuadraticVol::new(0.3, 0.1, 0.04).unwrap();
        let z = vec![0.1; 4];
        let dw = [0.1, -0.2, 0.05];
        let s = exp_martingale_price(&z, &dw, 0.25, &vol, 2.0).unwrap();
        let w: f64 = dw.iter().sum();
        assert!((s[3] - 2.0 * (0.2 * w - 0.5 * 0.04 * 0.75).exp()).abs() < 1e-14);
        assert!(exp_martingale_price(&z[..3], &dw, 0.25, &vol, 2.0).is_err());
    }

    #[test]
    fn csv_header_and_rows() {
        let nz = noise(4, 0.3, 1.0, 0);
        let sol = solve_wong_zakai(&UnitDrift, &nz, &SolverConfig::default()).unwrap();
        let mut buf = Vec::new();
        sol.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,S,V\n"));
        assert_eq!(text.lines().count(), 6);
    }
}
