//! Iterated integrals `I^m_{T1,T2} = ∫_{T1}^{T2} (X_{T1,t})^m dW_t` and their
//! smooth approximants.
//!
//! Pointwise functions here are exact for the paths they integrate; the
//! [`rate`] module evaluates the same integrals over many interval pairs at
//! once through prefix sums.

mod prefix;
pub mod rate;

pub use prefix::PrefixTable;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::leadlag::{lag_pl, lead_pl, MollifiedPath, PiecewiseLinearPath};
use crate::noise::{Grid, JointNoise};

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `∫_0^1 (a + b u)^m du` without dividing by `b`.
pub(crate) fn linear_power_integral(a: f64, b: f64, m: usize, theta: f64) -> f64 {
    // Σ_i C(m,i) a^{m−i} b^i θ^{i+1}/(i+1)
    let mut total = 0.0;
    let mut bi = 1.0;
    let mut th = theta;
    for i in 0..=m {
        total += binomial(m, i) * a.powi((m - i) as i32) * bi * th / (i + 1) as f64;
        bi *= b;
        th *= theta;
    }
    total
}

/// Left-point Itô sum on the noise grid, the reference value.
pub fn ito_oracle(noise: &JointNoise, m: usize, t1: f64, t2: f64) -> Result<f64> {
    let (i0, i1) = (noise.grid.index_of(t1)?, noise.grid.index_of(t2)?);
    if i0 > i1 {
        return Err(Error::param("interval", format!("T1 = {t1} > T2 = {t2}")));
    }
    let x0 = noise.x[i0];
    Ok((i0..i1)
        .map(|k| (noise.x[k] - x0).powi(m as i32) * noise.dw(k))
        .sum())
}

/// `∫_{T1}^{T2} (X̃_{T1,t})^m dW̃_t` for two piecewise-linear paths, exact up
/// to rounding: on each piece between knots of either path the integrand is
/// a polynomial.
pub fn leadlag_integral(
    x: &PiecewiseLinearPath,
    w: &PiecewiseLinearPath,
    m: usize,
    t1: f64,
    t2: f64,
) -> Result<f64> {
    if t1 > t2 {
        return Err(Error::param("interval", format!("T1 = {t1} > T2 = {t2}")));
    }
    if t1 == t2 {
        return Ok(0.0);
    }
    let mut cuts = vec![t1];
    cuts.extend(x.knots_in(t1, t2));
    cuts.extend(w.knots_in(t1, t2));
    cuts.push(t2);
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let x1 = x.value(t1);
    let mut total = 0.0;
    for pair in cuts.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let len = b - a;
        if len <= 0.0 {
            continue;
        }
        let mid = 0.5 * (a + b);
        let slope_x = x.slope(mid);
        let rate_w = w.slope(mid);
        let base = x.value(a) - x1;
        total += rate_w * len * linear_power_integral(base, slope_x * len, m, 1.0);
    }
    Ok(total)
}

/// Lead-lag integral between partition points `t_j < t_l` of the noise
/// grid, by the closed-form sum over cells:
/// `Σ_{k=j}^{l−1} ΔW_k Σ_i C(m,i)/(i+1) (X_{t_{k−1}} − X_{t_{j−1}})^{m−i} (ΔX_{k−1,k})^i`
/// with `X_{t_{−1}} := 0`.
pub fn leadlag_closed_form(noise: &JointNoise, m: usize, j: usize, l: usize) -> Result<f64> {
    if j > l || l > noise.grid.n {
        return Err(Error::param(
            "indices",
            format!("need j ≤ l ≤ n, got {j}, {l}"),
        ));
    }
    let xm = |k: usize| if k == 0 { 0.0 } else { noise.x[k - 1] };
    let base = xm(j);
    Ok((j..l)
        .map(|k| {
            let a = xm(k) - base;
            let b = noise.x[k] - xm(k);
            noise.dw(k) * linear_power_integral(a, b, m, 1.0)
        })
        .sum())
}

/// Same-cell closed form: for `t_j ≤ T1 ≤ T2 ≤ t_{j+1}`,
/// `(T2−T1)^{m+1} / ((m+1) Δ^{m+1}) · (X_{t_{j−1},t_j})^m · W_{t_j,t_{j+1}}`.
pub fn leadlag_same_cell(noise: &JointNoise, m: usize, t1: f64, t2: f64) -> Result<f64> {
    let dt = noise.grid.dt();
    let j = (t1 / dt).floor().min((noise.grid.n - 1) as f64) as usize;
    if t2 > noise.grid.time(j + 1) + 1e-12 * dt || t1 > t2 {
        return Err(Error::param("interval", "T1 and T2 must share a cell"));
    }
    let dx = noise.x[j] - if j == 0 { 0.0 } else { noise.x[j - 1] };
    Ok(((t2 - t1) / dt).powi(m as i32 + 1) / (m + 1) as f64 * dx.powi(m as i32) * noise.dw(j))
}

/// Lead-lag integral of the noise's own grid: lead `W`, one-step lag `X`.
pub fn noise_leadlag_integral(noise: &JointNoise, m: usize, t1: f64, t2: f64) -> Result<f64> {
    let x = lag_pl(&noise.x, noise.grid)?;
    let w = lead_pl(&noise.w, noise.grid)?;
    leadlag_integral(&x, &w, m, t1, t2)
}

/// Lead-lag integral with `X` replaced by a hybrid-scheme path on `grid`.
pub fn hybrid_leadlag_integral(
    grid: Grid,
    hybrid_x: &[f64],
    w: &[f64],
    m: usize,
    t1: f64,
    t2: f64,
) -> Result<f64> {
    let x = lag_pl(hybrid_x, grid)?;
    let w = lead_pl(w, grid)?;
    leadlag_integral(&x, &w, m, t1, t2)
}

/// `∫_{T1}^{T2} (X̃^ε_{T1,r})^m Ẇ^ε_r dr` by composite Gauss–Legendre
/// quadrature; both paths are smooth. Requires `T1 ≥ 3ε`.
pub fn mollifier_integral(
    x_lagged: &MollifiedPath,
    w: &MollifiedPath,
    m: usize,
    t1: f64,
    t2: f64,
) -> Result<f64> {
    let eps = w.eps();
    if t1 < 3.0 * eps * (1.0 - 1e-12) {
        return Err(Error::param("T1", format!("{t1} < 3ε = {}", 3.0 * eps)));
    }
    if t1 > t2 {
        return Err(Error::param("interval", format!("T1 = {t1} > T2 = {t2}")));
    }
    if t1 == t2 {
        return Ok(0.0);
    }
    let (nodes, weights) = crate::leadlag::gauss_legendre(8);
    let panels = ((t2 - t1) / (0.125 * eps)).ceil().max(1.0) as usize;
    let h = (t2 - t1) / panels as f64;
    let x1 = x_lagged.value(t1);
    let mut total = 0.0;
    for p in 0..panels {
        let mid = t1 + (p as f64 + 0.5) * h;
        for (z, wt) in nodes.iter().zip(&weights) {
            let r = mid + 0.5 * h * z;
            total += wt * (x_lagged.value(r) - x1).powi(m as i32) * w.derivative(r);
        }
    }
    Ok(total * 0.5 * h)
}

/// Weighted sup `max |approx − oracle| / |T2 − T1|^γ` over a pair grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderError {
    pub gamma: f64,
    pub sup: f64,
    pub argmax: (f64, f64),
}

/// Computes the Hölder error functional over all pairs `p < q` of
/// `points`, with `diff(p, q) = approx − oracle` on `[points[p], points[q]]`.
pub fn holder_error(
    points: &[f64],
    gamma: f64,
    mut diff: impl FnMut(usize, usize) -> f64,
) -> Result<HolderError> {
    if points.len() < 2 {
        return Err(Error::Empty("pair grid"));
    }
    let mut best = HolderError {
        gamma,
        sup: 0.0,
        argmax: (points[0], points[1]),
    };
    for p in 0..points.len() {
        for q in p + 1..points.len() {
            let len = points[q] - points[p];
            let v = diff(p, q).abs() / len.powf(gamma);
            if v > best.sup || v.is_nan() {
                best.sup = v;
                best.argmax = (points[p], points[q]);
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{FbmSampler, NoiseMethod, NoiseSpec, RngPolicy};

    fn noise(n: usize, seed: u64) -> JointNoise {
        let g = Grid::new(1.0, n).unwrap();
        let spec = NoiseSpec::new(g, 0.3, 0.6, NoiseMethod::ExactRl).unwrap();
        FbmSampler::new(spec).sample(&RngPolicy::new(seed), 0)
    }

    #[test]
    fn partition_points_match_closed_form() {
        let nz = noise(16, 1);
        for m in 0..4 {
            for (j, l) in [(0, 16), (3, 9), (5, 6), (7, 7)] {
                let exact =
                    noise_leadlag_integral(&nz, m, nz.grid.time(j), nz.grid.time(l)).unwrap();
                let closed = leadlag_closed_form(&nz, m, j, l).unwrap();
                assert!(
                    (exact - closed).abs() <= 1e-12 * closed.abs().max(1.0),
                    "m={m} {exact} {closed}"
                );
            }
        }
    }

    #[test]
    fn same_cell_closed_form() {
        let nz = noise(8, 2);
        let dt = nz.grid.dt();
        for m in 1..3 {
            let (t1, t2) = (3.2 * dt, 3.9 * dt);
            let exact = noise_leadlag_integral(&nz, m, t1, t2).unwrap();
            let closed = leadlag_same_cell(&nz, m, t1, t2).unwrap();
            assert!((exact - closed).abs() < 1e-13, "{exact} {closed}");
        }
    }

    #[test]
    fn m_zero_is_w_increment_and_oracle_at_m_zero() {
        let nz = noise(32, 3);
        let v = noise_leadlag_integral(&nz, 0, 0.25, 0.75).unwrap();
        assert!((v - (nz.w[24] - nz.w[8])).abs() < 1e-13);
        let o = ito_oracle(&nz, 0, 0.25, 0.75).unwrap();
        assert!((o - (nz.w[24] - nz.w[8])).abs() < 1e-13);
    }

    #[test]
    fn first_order_chen_relation() {
        // I¹_{T1,T2} = I¹_{T1,u} + I¹_{u,T2} + X_{T1,u} W_{u,T2}
        let nz = noise(64, 4);
        let (a, u, b) = (0.125, 0.5, 0.875);
        let oracle = |s, t| ito_oracle(&nz, 1, s, t).unwrap();
        let xi = |t: f64| nz.x[nz.grid.index_of(t).unwrap()];
        let wi = |t: f64| nz.w[nz.grid.index_of(t).unwrap()];
        let lhs = oracle(a, b);
        let rhs = oracle(a, u) + oracle(u, b) + (xi(u) - xi(a)) * (wi(b) - wi(u));
        assert!((lhs - rhs).abs() < 1e-12);
        let x = lag_pl(&nz.x, nz.grid).unwrap();
        let w = lead_pl(&nz.w, nz.grid).unwrap();
        let ll = |s, t| leadlag_integral(&x, &w, 1, s, t).unwrap();
        let lhs = ll(a, b);
        let rhs = ll(a, u) + ll(u, b) + (x.value(u) - x.value(a)) * (w.value(b) - w.value(u));
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn holder_error_basics() {
        let pts = [0.0, 0.5, 1.0];
        let zero = holder_error(&pts, 0.5, |_, _| 0.0).unwrap();
        assert_eq!(zero.sup, 0.0);
        let single = holder_error(&[0.0, 0.25], 0.5, |_, _| 0.3).unwrap();
        assert!((single.sup - 0.6).abs() < 1e-15);
        assert!(holder_error(&[0.0], 0.5, |_, _| 1.0).is_err());
    }

    #[test]
    fn mollifier_integral_of_constant_x_vanishes() {
        let g = Grid::new(1.0, 256).unwrap();
        let x = crate::leadlag::lead_pl(&vec![1.5; 257], g).unwrap();
        let w = crate::leadlag::lead_pl(&g.times(), g).unwrap();
        let xl = MollifiedPath::lag_mollify(x, 0.05).unwrap();
        let wm = MollifiedPath::mollify(w, 0.05).unwrap();
        assert!(mollifier_integral(&xl, &wm, 1, 0.2, 0.9).unwrap().abs() < 1e-14);
        assert_eq!(mollifier_integral(&xl, &wm, 1, 0.3, 0.3).unwrap(), 0.0);
        assert!(mollifier_integral(&xl, &wm, 1, 0.1, 0.3).is_err());
    }
}
