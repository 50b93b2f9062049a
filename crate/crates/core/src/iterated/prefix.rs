use super::{binomial, linear_power_integral};
use crate::error::{Error, Result};

/// Running integrals `Q_i(τ_p) = ∫_0^{τ_p} Y_r^i dV_r` of an integrand `Y`
/// against an integrator `V` at a list of evaluation points, so that
/// `∫_{τ_p}^{τ_q} (Y_r − Y_{τ_p})^m dV_r
///   = Σ_i C(m,i) (−Y_{τ_p})^{m−i} (Q_i(τ_q) − Q_i(τ_p))`
/// costs `O(m)` per pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PrefixTable {
    m: usize,
    times: Vec<f64>,
    base: Vec<f64>,
    q: Vec<Vec<f64>>,
    binom: Vec<f64>,
}

impl PrefixTable {
    fn from_parts(m: usize, times: Vec<f64>, base: Vec<f64>, q: Vec<Vec<f64>>) -> Self {
        PrefixTable {
            m,
            binom: (0..=m).map(|i| binomial(m, i)).collect(),
            times,
            base,
            q,
        }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Integral between evaluation points `p ≤ q`.
    #[inline]
    pub fn integral(&self, p: usize, q: usize) -> f64 {
        let y = -self.base[p];
        let mut pow = 1.0;
        let mut total = 0.0;
        // i = m down to 0, so (−Y)^{m−i} grows with the loop
        for i in (0..=self.m).rev() {
            total += self.binom[i] * pow * (self.q[i][q] - self.q[i][p]);
            pow *= y;
        }
        total
    }

    /// Left-point Itô sums on a fine grid, read at every `stride`-th point.
    pub fn left_point(x: &[f64], w: &[f64], m: usize, stride: usize) -> Result<Self> {
        check_lengths(x, w)?;
        let n = x.len() - 1;
        if stride == 0 || n % stride != 0 {
            return Err(Error::param(
                "stride",
                format!("{stride} does not divide {n}"),
            ));
        }
        let mut acc = vec![0.0; m + 1];
        let mut q = vec![Vec::with_capacity(n / stride + 1); m + 1];
        let mut base = Vec::with_capacity(n / stride + 1);
        for k in 0..=n {
            if k % stride == 0 {
                for i in 0..=m {
                    q[i].push(acc[i]);
                }
                base.push(x[k]);
            }
            if k < n {
                let dw = w[k + 1] - w[k];
                let mut p = 1.0;
                for a in acc.iter_mut() {
                    *a += p * dw;
                    p *= x[k];
                }
            }
        }
        Ok(Self::from_parts(m, stride_times(n, stride), base, q))
    }

    /// Lead-lag integrals on a coarse grid: `W` interpolated linearly, `X`
    /// interpolated and delayed by `lag ∈ {0, 1}` steps. Evaluation points
    /// are the grid points and the cell midpoints, in time units of one cell.
    pub fn lead_lag(x: &[f64], w: &[f64], m: usize, lag: usize) -> Result<Self> {
        check_lengths(x, w)?;
        if lag > 1 {
            return Err(Error::param("lag", "prefix sums support lags 0 and 1"));
        }
        let n = x.len() - 1;
        let start = |k: usize| {
            if lag == 0 {
                x[k]
            } else if k == 0 {
                0.0
            } else {
                x[k - 1]
            }
        };
        let mut acc = vec![0.0; m + 1];
        let mut q = vec![Vec::with_capacity(2 * n + 1); m + 1];
        let mut base = Vec::with_capacity(2 * n + 1);
        for k in 0..=n {
            for i in 0..=m {
                q[i].push(acc[i]);
            }
            if k == n {
                base.push(if lag == 0 { x[n] } else { x[n - 1] });
                break;
            }
            let a = start(k);
            let b = start(k + 1) - a;
            let dw = w[k + 1] - w[k];
            base.push(a);
            for (i, qi) in q.iter_mut().enumerate() {
                qi.push(acc[i] + dw * linear_power_integral(a, b, i, 0.5));
            }
            base.push(a + 0.5 * b);
            for (i, ai) in acc.iter_mut().enumerate() {
                *ai += dw * linear_power_integral(a, b, i, 1.0);
            }
        }
        let times = (0..=2 * n).map(|p| 0.5 * p as f64).collect();
        Ok(Self::from_parts(m, times, base, q))
    }

    /// Trapezoidal integrals of `y^i · v̇` on a fine grid of mesh `dt`, read
    /// at every `stride`-th point from `first` on.
    pub fn smooth(
        y: &[f64],
        vdot: &[f64],
        dt: f64,
        m: usize,
        stride: usize,
        first: usize,
    ) -> Result<Self> {
        check_lengths(y, vdot)?;
        let n = y.len() - 1;
        if stride == 0 {
            return Err(Error::param("stride", "must be positive"));
        }
        let f = |k: usize, i: usize| y[k].powi(i as i32) * vdot[k];
        let mut acc = vec![0.0; m + 1];
        let mut q = vec![Vec::new(); m + 1];
        let mut base = Vec::new();
        let mut times = Vec::new();
        for k in 0..=n {
            if k >= first && (k - first) % stride == 0 {
                for i in 0..=m {
                    q[i].push(acc[i]);
                }
                base.push(y[k]);
                times.push(k as f64);
            }
            if k < n {
                for (i, a) in acc.iter_mut().enumerate() {
                    *a += 0.5 * dt * (f(k, i) + f(k + 1, i));
                }
            }
        }
        Ok(Self::from_parts(m, times, base, q))
    }
}

fn stride_times(n: usize, stride: usize) -> Vec<f64> {
    (0..=n / stride).map(|p| (p * stride) as f64).collect()
}

fn check_lengths(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(Error::Empty("path"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::iterated::{ito_oracle, noise_leadlag_integral};
    use crate::noise::{FbmSampler, Grid, NoiseMethod, NoiseSpec, RngPolicy};

    #[test]
    fn prefix_sums_match_direct_integrals() {
        let g = Grid::new(1.0, 32).unwrap();
        let spec = NoiseSpec::new(g, 0.3, 0.4, NoiseMethod::ExactRl).unwrap();
        let nz = FbmSampler::new(spec).sample(&RngPolicy::new(8), 1);
        for m in 1..=3 {
            let lp = PrefixTable::left_point(&nz.x, &nz.w, m, 4).unwrap();
            let direct = ito_oracle(&nz, m, 0.25, 0.875).unwrap();
            assert!((lp.integral(2, 7) - direct).abs() < 1e-12);
            let ll = PrefixTable::lead_lag(&nz.x, &nz.w, m, 1).unwrap();
            // evaluation point p sits at time p·Δ/2
            let dt = g.dt();
            let exact = noise_leadlag_integral(&nz, m, 3.0 * 0.5 * dt, 41.0 * 0.5 * dt).unwrap();
            assert!((ll.integral(3, 41) - exact).abs() < 1e-12, "{m}");
        }
    }

    #[test]
    fn smooth_prefix_of_linear_integrand() {
        // ∫_0^1 r · 1 dr with y = r, v̇ = 1
        let n = 100;
        let y: Vec<f64> = (0..=n).map(|k| k as f64 / n as f64).collect();
        let v = vec![1.0; n + 1];
        let t = PrefixTable::smooth(&y, &v, 0.01, 1, 10, 0).unwrap();
        // ∫_{0.2}^{0.7} (r − 0.2) dr = 0.125
        assert!((t.integral(2, 7) - 0.125).abs() < 1e-12);
    }
}
