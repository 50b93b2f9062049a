use super::PiecewiseLinearPath;
use crate::conv::Convolver;
use crate::error::{Error, Result};

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Chebyshev-like initial guess, refined by Newton on P_n.
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 {
                1.0
            } else if n == 1 {
                z
            } else {
                p1
            };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Normalised bump `φ(x) ∝ exp(−1/(1−x²))` on `(−1, 1)`, with
/// `φ_ε(r) = φ(r/ε)/ε`.
#[derive(Debug, Clone)]
pub struct Mollifier {
    norm: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Default for Mollifier {
    fn default() -> Self {
        Mollifier::new()
    }
}

impl Mollifier {
    pub const GL_NODES: usize = 32;

    pub fn new() -> Self {
        let (nodes, weights) = gauss_legendre(Self::GL_NODES);
        let mut m = Mollifier {
            norm: 1.0,
            nodes,
            weights,
        };
        m.norm = m.integrate_panels(-1.0, 1.0, 8, |x| bump(x));
        m
    }

    fn integrate_panels(&self, a: f64, b: f64, panels: usize, f: impl Fn(f64) -> f64) -> f64 {
        let h = (b - a) / panels as f64;
        let mut total = 0.0;
        for p in 0..panels {
            let lo = a + p as f64 * h;
            let mid = lo + 0.5 * h;
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                total += w * f(mid + 0.5 * h * x);
            }
        }
        total * 0.5 * h
    }

    /// `φ(x)`.
    pub fn profile(&self, x: f64) -> f64 {
        bump(x) / self.norm
    }

    /// `φ'(x)`.
    pub fn derivative(&self, x: f64) -> f64 {
        if x.abs() >= 1.0 {
            return 0.0;
        }
        let d = 1.0 - x * x;
        -2.0 * x / (d * d) * self.profile(x)
    }

    /// `∫ φ` by a finer quadrature; equals one to rounding.
    pub fn mass(&self) -> f64 {
        self.integrate_panels(-1.0, 1.0, 16, |x| self.profile(x))
    }

    /// `∫_{-1}^{1} φ(z) f(z) dz` with panels split at `breaks`.
    fn integrate_against(
        &self,
        breaks: &[f64],
        weight: impl Fn(f64) -> f64,
        f: impl Fn(f64) -> f64,
    ) -> f64 {
        let mut pts = vec![-1.0];
        pts.extend(breaks.iter().copied().filter(|z| z.abs() < 1.0));
        pts.push(1.0);
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut total = 0.0;
        for pair in pts.windows(2) {
            let (lo, hi) = (pair[0], pair[1]);
            if hi - lo <= 0.0 {
                continue;
            }
            // keep panels short so the bump itself is well resolved
            let sub = ((hi - lo) / 0.25).ceil().max(1.0) as usize;
            total += self.integrate_panels(lo, hi, sub, |z| weight(z) * f(z));
        }
        total
    }
}

fn bump(x: f64) -> f64 {
    if x.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - x * x)).exp()
    }
}

/// `X^ε_t = ∫ φ_ε(t − s) X̄(s) ds`, delayed by `shift`, where `X̄` extends the
/// piecewise-linear path by its end values outside `[0, T]`.
#[derive(Debug, Clone)]
pub struct MollifiedPath {
    base: PiecewiseLinearPath,
    eps: f64,
    shift: f64,
    mollifier: Mollifier,
}

impl MollifiedPath {
    pub fn new(base: PiecewiseLinearPath, eps: f64, shift: f64) -> Result<Self> {
        if base.lag() != 0.0 {
            return Err(Error::param(
                "base",
                "mollify a lead path; use `shift` to delay",
            ));
        }
        if !(eps > 0.0) || shift < 0.0 {
            return Err(Error::param("eps", format!("eps = {eps}, shift = {shift}")));
        }
        Ok(MollifiedPath {
            base,
            eps,
            shift,
            mollifier: Mollifier::new(),
        })
    }

    /// `W^ε`, undelayed.
    pub fn mollify(base: PiecewiseLinearPath, eps: f64) -> Result<Self> {
        MollifiedPath::new(base, eps, 0.0)
    }

    /// `X̃^ε_t = X^ε_{t − 2ε}`.
    pub fn lag_mollify(base: PiecewiseLinearPath, eps: f64) -> Result<Self> {
        MollifiedPath::new(base, eps, 2.0 * eps)
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    fn extended(&self, s: f64) -> f64 {
        let g = self.base.grid();
        self.base.value(s.clamp(0.0, g.t_end))
    }

    fn breaks(&self, centre: f64) -> Vec<f64> {
        let g = self.base.grid();
        let mut knots = self.base.knots_in(centre - self.eps, centre + self.eps);
        knots.extend([0.0, g.t_end]);
        knots.iter().map(|s| (centre - s) / self.eps).collect()
    }

    pub fn value(&self, t: f64) -> f64 {
        let c = t - self.shift;
        self.mollifier.integrate_against(
            &self.breaks(c),
            |z| self.mollifier.profile(z),
            |z| self.extended(c - self.eps * z),
        )
    }

    /// `d/dt X^ε_t = ε^{-1} ∫ φ'(z) X̄(t − shift − εz) dz`.
    pub fn derivative(&self, t: f64) -> f64 {
        let c = t - self.shift;
        self.mollifier.integrate_against(
            &self.breaks(c),
            |z| self.mollifier.derivative(z),
            |z| self.extended(c - self.eps * z),
        ) / self.eps
    }
}

/// Mollified values and derivatives of a path sampled on a fine grid, with
/// `ε = width · δ`. Uses the discrete convolution with the sampled bump,
/// which is spectrally accurate because `φ` is smooth and compactly
/// supported.
#[derive(Clone)]
pub struct MollifiedGrid {
    width: usize,
    n: usize,
    smooth_kernel: Vec<f64>,
    deriv_kernel: Vec<f64>,
    smooth: Convolver,
    deriv: Convolver,
}

impl MollifiedGrid {
    /// `width` fine steps per ε, paths of `n` fine steps with mesh `dt`.
    pub fn new(width: usize, n: usize, dt: f64) -> Result<Self> {
        if width < 2 {
            return Err(Error::param("width", "need at least two fine steps per ε"));
        }
        let m = Mollifier::new();
        let eps = width as f64 * dt;
        let l = width as f64;
        // Weights against the hat functions of the fine grid, so the result
        // is the mollification of the piecewise-linear interpolant itself.
        let hat_weight = |i: usize, weight: &dyn Fn(f64) -> f64| {
            let j = i as f64 - l - 1.0;
            let breaks = [(j - 1.0) / l, j / l, (j + 1.0) / l];
            m.integrate_against(&breaks, weight, |z| (1.0 - (j - l * z).abs()).max(0.0))
        };
        // one extra node on each side: the hats reach one step past ±ε
        let ks: Vec<f64> = (0..=2 * width + 2)
            .map(|i| hat_weight(i, &|z| m.profile(z)))
            .collect();
        let kd: Vec<f64> = (0..=2 * width + 2)
            .map(|i| hat_weight(i, &|z| m.derivative(z)) / eps)
            .collect();
        let padded = n + 1 + 4 * (width + 1) + 2 * width;
        Ok(MollifiedGrid {
            width,
            n,
            smooth: Convolver::new(ks.clone(), padded),
            deriv: Convolver::new(kd.clone(), padded),
            smooth_kernel: ks,
            deriv_kernel: kd,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    fn padded(&self, values: &[f64], left: usize) -> Vec<f64> {
        let w = self.width + 1;
        let mut v = Vec::with_capacity(values.len() + left + w);
        v.extend(std::iter::repeat_n(values[0], left));
        v.extend_from_slice(values);
        v.extend(std::iter::repeat_n(values[values.len() - 1], w));
        v
    }

    fn apply(&self, conv: &Convolver, values: &[f64], shift: usize) -> Result<Vec<f64>> {
        if values.len() != self.n + 1 {
            return Err(Error::LengthMismatch {
                expected: self.n + 1,
                actual: values.len(),
            });
        }
        let w = self.width + 1;
        let left = w + shift;
        let full = conv.full(&self.padded(values, left));
        // full[k + 2w] is centred on padded index k + w, i.e. on k − shift
        Ok((0..=self.n).map(|k| full[k + 2 * w]).collect())
    }

    /// `X^ε` at every fine grid point, delayed by `shift_steps` fine steps.
    pub fn values(&self, values: &[f64], shift_steps: usize) -> Result<Vec<f64>> {
        self.apply(&self.smooth, values, shift_steps)
    }

    /// `d/dt X^ε` at every fine grid point, delayed by `shift_steps`.
    pub fn derivatives(&self, values: &[f64], shift_steps: usize) -> Result<Vec<f64>> {
        self.apply(&self.deriv, values, shift_steps)
    }

    fn point(&self, kernel: &[f64], values: &[f64], k: usize, shift: usize) -> f64 {
        let w = (self.width + 1) as i64;
        let last = values.len() as i64 - 1;
        let c = k as i64 - shift as i64;
        kernel
            .iter()
            .enumerate()
            .map(|(i, kv)| kv * values[(c - (i as i64 - w)).clamp(0, last) as usize])
            .sum()
    }

    /// Single value of [`MollifiedGrid::values`] by a direct sum.
    pub fn value_at(&self, values: &[f64], k: usize, shift_steps: usize) -> f64 {
        self.point(&self.smooth_kernel, values, k, shift_steps)
    }

    /// Single value of [`MollifiedGrid::derivatives`] by a direct sum.
    pub fn derivative_at(&self, values: &[f64], k: usize, shift_steps: usize) -> f64 {
        self.point(&self.deriv_kernel, values, k, shift_steps)
    }

    /// `X̃^ε = X^ε(· − 2ε)` at the fine grid points.
    pub fn lagged_values(&self, values: &[f64]) -> Result<Vec<f64>> {
        self.values(values, 2 * self.width)
    }
}
