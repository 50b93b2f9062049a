//! Drift that turns the price equation into a local martingale.

use super::RdeSystem;
use crate::error::{Error, Result};

/// Relative step of the central-difference fallback.
const FD_REL_STEP: f64 = 1e-6;

/// Which of the two additive contributions of the martingale drift are kept.
///
/// Dropping one is only useful as an ablation: the resulting `S` is no longer
/// a local martingale.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DriftTerms {
    /// `−½ ∂_S σ · σ`.
    pub s_term: bool,
    /// `−½ ∂_V σ · ς`.
    pub v_term: bool,
}

impl DriftTerms {
    pub const FULL: DriftTerms = DriftTerms {
        s_term: true,
        v_term: true,
    };
    pub const NONE: DriftTerms = DriftTerms {
        s_term: false,
        v_term: false,
    };
    pub const WITHOUT_S: DriftTerms = DriftTerms {
        s_term: false,
        v_term: true,
    };
    pub const WITHOUT_V: DriftTerms = DriftTerms {
        s_term: true,
        v_term: false,
    };
}

impl Default for DriftTerms {
    fn default() -> Self {
        DriftTerms::FULL
    }
}

fn fd_step(x: f64) -> f64 {
    FD_REL_STEP * x.abs().max(1.0)
}

/// `(∂_S σ, ∂_V σ)`, analytic when the system provides it and by central
/// differences otherwise.
pub fn sigma_gradient<S: RdeSystem + ?Sized>(
    sys: &S,
    s: f64,
    v: &[f64],
    t: f64,
    dv: &mut [f64],
) -> f64 {
    if let Some(ds) = sys.sigma_gradient(s, v, t, dv) {
        return ds;
    }
    let hs = fd_step(s);
    let ds = (sys.sigma(s + hs, v, t) - sys.sigma(s - hs, v, t)) / (2.0 * hs);
    let mut probe = v.to_vec();
    for i in 0..v.len() {
        let h = fd_step(v[i]);
        probe[i] = v[i] + h;
        let up = sys.sigma(s, &probe, t);
        probe[i] = v[i] - h;
        let down = sys.sigma(s, &probe, t);
        probe[i] = v[i];
        dv[i] = (up - down) / (2.0 * h);
    }
    ds
}

/// Factor count up to which scratch space lives on the stack.
const STACK_DIM: usize = 8;

/// `−½(∂_S σ · σ + ∂_V σ · ς)`, restricted to the selected terms.
pub fn martingale_drift<S: RdeSystem + ?Sized>(
    sys: &S,
    terms: DriftTerms,
    s: f64,
    v: &[f64],
    t: f64,
) -> f64 {
    if terms == DriftTerms::NONE {
        return 0.0;
    }
    let m = sys.dim_v();
    if m <= STACK_DIM {
        let (mut dv, mut vs) = ([0.0; STACK_DIM], [0.0; STACK_DIM]);
        drift_with(sys, terms, s, v, t, &mut dv[..m], &mut vs[..m])
    } else {
        drift_with(sys, terms, s, v, t, &mut vec![0.0; m], &mut vec![0.0; m])
    }
}

fn drift_with<S: RdeSystem + ?Sized>(
    sys: &S,
    terms: DriftTerms,
    s: f64,
    v: &[f64],
    t: f64,
    dv: &mut [f64],
    vs: &mut [f64],
) -> f64 {
    let ds = sigma_gradient(sys, s, v, t, dv);
    let mut g = 0.0;
    if terms.s_term {
        g += ds * sys.sigma(s, v, t);
    }
    if terms.v_term && !v.is_empty() {
        sys.varsigma(s, v, t, vs);
        g += dv.iter().zip(vs.iter()).map(|(a, b)| a * b).sum::<f64>();
    }
    -0.5 * g
}

/// A system whose price drift is the user drift plus the martingale drift.
#[derive(Debug, Clone)]
pub struct MartingaleDrift<S> {
    inner: S,
    terms: DriftTerms,
}

impl<S: RdeSystem> MartingaleDrift<S> {
    pub fn inner(&self) -> &S {
        &self.inner
    }

    pub fn terms(&self) -> DriftTerms {
        self.terms
    }

    /// Same system with a different selection of drift terms.
    pub fn with_terms(mut self, terms: DriftTerms) -> Self {
        self.terms = terms;
        self
    }
}

/// Wraps `sys` so that `g = −½Σ(∂_S σ σ + ∂_V σ ς) + g_user`.
///
/// Fails when the derivatives are not finite at the initial state.
pub fn build_martingale_drift<S: RdeSystem>(sys: S) -> Result<MartingaleDrift<S>> {
    let v0 = sys.v0();
    let mut dv = vec![0.0; sys.dim_v()];
    let ds = sigma_gradient(&sys, sys.s0(), &v0, 0.0, &mut dv);
    if !ds.is_finite() || dv.iter().any(|d| !d.is_finite()) {
        return Err(Error::param(
            "sigma",
            "derivative is not finite at the initial state",
        ));
    }
    Ok(MartingaleDrift {
        inner: sys,
        terms: DriftTerms::FULL,
    })
}

impl<S: RdeSystem> RdeSystem for MartingaleDrift<S> {
    fn dim_v(&self) -> usize {
        self.inner.dim_v()
    }
    fn s0(&self) -> f64 {
        self.inner.s0()
    }
    fn v0(&self) -> Vec<f64> {
        self.inner.v0()
    }
    fn sigma(&self, s: f64, v: &[f64], t: f64) -> f64 {
        self.inner.sigma(s, v, t)
    }
    fn tau(&self, s: f64, v: &[f64], t: f64, out: &mut [f64]) {
        self.inner.tau(s, v, t, out)
    }
    fn varsigma(&self, s: f64, v: &[f64], t: f64, out: &mut [f64]) {
        self.inner.varsigma(s, v, t, out)
    }
    fn drift_s(&self, s: f64, v: &[f64], t: f64) -> f64 {
        self.inner.drift_s(s, v, t) + martingale_drift(&self.inner, self.terms, s, v, t)
    }
    fn drift_v(&self, s: f64, v: &[f64], t: f64, out: &mut [f64]) {
        self.inner.drift_v(s, v, t, out)
    }
    fn sigma_gradient(&self, s: f64, v: &[f64], t: f64, dv: &mut [f64]) -> Option<f64> {
        self.inner.sigma_gradient(s, v, t, dv)
    }
}
