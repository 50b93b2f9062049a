//! Lead and lagged smooth approximations of sample paths.
//!
//! The driving pair is approximated by a *lead* path for `W` and a path for
//! `X` that lags slightly behind, either piecewise linearly or by
//! convolution with a bump mollifier.

mod mollifier;

pub use mollifier::{gauss_legendre, MollifiedGrid, MollifiedPath, Mollifier};

use crate::error::{Error, Result};
use crate::noise::Grid;

/// Slack, in mesh units, for snapping a time onto a knot.
const KNOT_TOL: f64 = 1e-9;

/// Piecewise-linear interpolation of grid values, delayed by `lag · Δ`.
///
/// Before the delay has elapsed the path is zero; after the last knot it is
/// held at the final value.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinearPath {
    grid: Grid,
    values: Vec<f64>,
    lag: f64,
}

impl PiecewiseLinearPath {
    pub fn new(grid: Grid, values: Vec<f64>, lag: f64) -> Result<Self> {
        if values.len() != grid.n + 1 {
            return Err(Error::LengthMismatch {
                expected: grid.n + 1,
                actual: values.len(),
            });
        }
        if !(lag >= 0.0 && lag.is_finite()) {
            return Err(Error::param("lag", format!("{lag} must be non-negative")));
        }
        Ok(PiecewiseLinearPath { grid, values, lag })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn lag(&self) -> f64 {
        self.lag
    }

    /// Position in knot units, snapped onto integers within tolerance.
    fn position(&self, t: f64) -> f64 {
        let u = t / self.grid.dt() - self.lag;
        let r = u.round();
        if (u - r).abs() <= KNOT_TOL * r.abs().max(1.0) {
            r
        } else {
            u
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        let u = self.position(t);
        let n = self.grid.n;
        if u < 0.0 {
            return 0.0;
        }
        if u >= n as f64 {
            return self.values[n];
        }
        let j = u.floor() as usize;
        let f = u - j as f64;
        if f == 0.0 {
            self.values[j]
        } else {
            self.values[j] + f * (self.values[j + 1] - self.values[j])
        }
    }

    /// Right derivative: constant on each piece, zero outside the knots.
    pub fn slope(&self, t: f64) -> f64 {
        let u = self.position(t);
        let n = self.grid.n;
        if u < 0.0 || u >= n as f64 {
            return 0.0;
        }
        let j = u.floor() as usize;
        (self.values[j + 1] - self.values[j]) / self.grid.dt()
    }

    /// Knot times `(k + lag) Δ` inside the open interval `(a, b)`.
    pub fn knots_in(&self, a: f64, b: f64) -> Vec<f64> {
        let dt = self.grid.dt();
        let first = ((a / dt - self.lag).floor().max(0.0)) as usize;
        (first..=self.grid.n)
            .map(|k| (k as f64 + self.lag) * dt)
            .filter(|&t| t > a && t < b)
            .collect()
    }
}

/// `W^Δ`: the piecewise-linear interpolation of `W` on the grid.
pub fn lead_pl(values: &[f64], grid: Grid) -> Result<PiecewiseLinearPath> {
    PiecewiseLinearPath::new(grid, values.to_vec(), 0.0)
}

/// `X̃^Δ`: the interpolation of `X` delayed by one mesh, so on
/// `[t_k, t_{k+1})` it moves from `X_{t_{k-1}}` to `X_{t_k}`.
pub fn lag_pl(values: &[f64], grid: Grid) -> Result<PiecewiseLinearPath> {
    PiecewiseLinearPath::new(grid, values.to_vec(), 1.0)
}

/// Interpolation of `X` delayed by `lag_fraction · Δ`.
pub fn custom_lag_pl(values: &[f64], grid: Grid, lag_fraction: f64) -> Result<PiecewiseLinearPath> {
    PiecewiseLinearPath::new(grid, values.to_vec(), lag_fraction)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> (Grid, Vec<f64>) {
        (Grid::new(1.0, 4).unwrap(), vec![0.0, 1.0, -1.0, 2.0, 0.5])
    }

    #[test]
    fn lead_hits_knots_exactly() {
        let (g, v) = sample();
        let p = lead_pl(&v, g).unwrap();
        for k in 0..=4 {
            assert_eq!(p.value(g.time(k)), v[k]);
        }
        assert_eq!(p.value(0.125), 0.5);
        assert_eq!(p.slope(0.3), -8.0);
    }

    #[test]
    fn lag_is_one_step_behind() {
        let (g, v) = sample();
        let p = lag_pl(&v, g).unwrap();
        assert_eq!(p.value(0.0), 0.0);
        assert_eq!(p.value(0.2), 0.0);
        for k in 1..=4 {
            assert_eq!(p.value(g.time(k)), v[k - 1]);
        }
        assert_eq!(p.value(1.0), v[3]);
        assert_eq!(p.value(0.375), 0.5 * (v[0] + v[1]));
    }

    #[test]
    fn custom_lag_knots() {
        let (g, v) = sample();
        let p = custom_lag_pl(&v, g, 1.2).unwrap();
        assert_eq!(p.value(0.25 * 2.2), v[1]);
        let knots = p.knots_in(0.0, 1.0);
        assert_eq!(knots.len(), 3);
        assert!((knots[0] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_input() {
        let (g, v) = sample();
        assert!(lead_pl(&v[..3], g).is_err());
        assert!(custom_lag_pl(&v, g, -0.5).is_err());
    }
}
