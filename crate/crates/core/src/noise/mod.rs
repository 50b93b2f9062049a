//! Reproducible Brownian and fractional Brownian sample paths.
//!
//! Every random draw comes from a counter-based ChaCha stream keyed by the
//! master seed, a per-purpose tag and the path index, so a batch of paths is
//! bit-identical regardless of thread count or evaluation order.

mod export;
mod fbm;

pub use export::{read_paths_csv, write_paths_csv, PathColumns};
pub use fbm::{fbm_kernel, hybrid_residual_std, FbmSampler, HybridRefiner};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Relative slack (in mesh units) when matching a time to a grid point.
pub const ALIGN_TOL: f64 = 1e-9;

/// Uniform grid `t_k = k T / n`, `k = 0..=n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub t_end: f64,
    pub n: usize,
}

impl Grid {
    pub fn new(t_end: f64, n: usize) -> Result<Self> {
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(Error::param("t_end", format!("{t_end} must be positive")));
        }
        if n == 0 {
            return Err(Error::param("n", "grid needs at least one step"));
        }
        Ok(Grid { t_end, n })
    }

    /// Grid with mesh `dt` covering `[0, t_end]`; `t_end / dt` must be an integer.
    pub fn with_mesh(t_end: f64, dt: f64) -> Result<Self> {
        let steps = t_end / dt;
        let n = steps.round();
        if n < 1.0 || (steps - n).abs() > 1e-6 {
            return Err(Error::Misaligned {
                time: t_end,
                mesh: dt,
            });
        }
        Grid::new(t_end, n as usize)
    }

    pub fn dt(&self) -> f64 {
        self.t_end / self.n as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        if k == self.n {
            self.t_end
        } else {
            k as f64 * self.dt()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.n).map(|k| self.time(k)).collect()
    }

    /// Index of `t` on the grid, or [`Error::Misaligned`].
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let u = t / self.dt();
        let k = u.round();
        if (u - k).abs() > ALIGN_TOL * u.abs().max(1.0) || k < 0.0 || k > self.n as f64 {
            return Err(Error::Misaligned {
                time: t,
                mesh: self.dt(),
            });
        }
        Ok(k as usize)
    }

    /// Coarser grid keeping every `factor`-th point.
    pub fn coarsen(&self, factor: usize) -> Result<Grid> {
        if factor == 0 || self.n % factor != 0 {
            return Err(Error::param(
                "factor",
                format!("{factor} does not divide {} steps", self.n),
            ));
        }
        Grid::new(self.t_end, self.n / factor)
    }

    /// Prefix grid `[0, t_k]`.
    pub fn truncate(&self, k: usize) -> Result<Grid> {
        Grid::new(self.time(k), k)
    }
}

/// Purpose tag mixed into the key so independent draws never share a stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamTag {
    Brownian,
    Orthogonal,
    HybridCorrection,
    Other(u64),
}

impl StreamTag {
    fn code(self) -> u64 {
        match self {
            StreamTag::Brownian => 1,
            StreamTag::Orthogonal => 2,
            StreamTag::HybridCorrection => 3,
            StreamTag::Other(c) => 0x1000 + c,
        }
    }
}

/// Seed policy: `(master seed, tag, path index)` determines every draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngPolicy {
    pub master_seed: u64,
}

impl RngPolicy {
    pub fn new(master_seed: u64) -> Self {
        RngPolicy { master_seed }
    }

    pub fn normals(&self, tag: StreamTag, path_index: u64) -> NormalStream {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.master_seed.to_le_bytes());
        key[8..16].copy_from_slice(&tag.code().to_le_bytes());
        key[16..24].copy_from_slice(b"roughvol");
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(path_index);
        NormalStream { rng }
    }

    /// Derived policy for an independent experiment sharing the same master seed.
    pub fn derive(&self, salt: u64) -> RngPolicy {
        RngPolicy {
            master_seed: self.master_seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15),
        }
    }
}

/// Standard normal draws by inversion of uniforms from a ChaCha stream.
pub struct NormalStream {
    rng: ChaCha8Rng,
}

impl NormalStream {
    pub fn uniform(&mut self) -> f64 {
        // 53 random bits, centred in their cell so the result lies in (0, 1).
        ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    pub fn next_normal(&mut self) -> f64 {
        standard_normal().inverse_cdf(self.uniform())
    }

    pub fn fill(&mut self, out: &mut [f64], scale: f64) {
        let n = standard_normal();
        for o in out {
            *o = scale * n.inverse_cdf(self.uniform());
        }
    }
}

fn standard_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

/// Brownian increments `ΔW_k`, `k = 0..n`, of the given path index.
pub fn brownian_increments(
    grid: &Grid,
    rng: &RngPolicy,
    tag: StreamTag,
    path_index: u64,
) -> Vec<f64> {
    let mut dw = vec![0.0; grid.n];
    rng.normals(tag, path_index).fill(&mut dw, grid.dt().sqrt());
    dw
}

/// Brownian path values `W_{t_k}`, `k = 0..=n`, with `W_0 = 0`.
pub fn sample_brownian(grid: &Grid, rng: &RngPolicy, path_index: u64) -> Vec<f64> {
    cumulative(&brownian_increments(
        grid,
        rng,
        StreamTag::Brownian,
        path_index,
    ))
}

pub(crate) fn cumulative(increments: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(increments.len() + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for &d in increments {
        acc += d;
        out.push(acc);
    }
    out
}

/// How the fractional component is produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseMethod {
    /// Interval-averaged Riemann–Liouville convolution on the grid; the
    /// reference path for convergence studies.
    ExactRl,
    /// Hybrid scheme with one exactly-simulated cell (κ = 1).
    Hybrid,
    /// Paths supplied by the caller.
    Custom,
}

impl std::str::FromStr for NoiseMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact-rl" | "exact" => Ok(NoiseMethod::ExactRl),
            "hybrid" => Ok(NoiseMethod::Hybrid),
            "custom" => Ok(NoiseMethod::Custom),
            _ => Err(Error::param(
                "method",
                format!("unknown noise method `{s}`"),
            )),
        }
    }
}

/// Static description of a correlated (X, W) pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub grid: Grid,
    pub hurst: f64,
    pub rho: f64,
    pub method: NoiseMethod,
}

impl NoiseSpec {
    pub fn new(grid: Grid, hurst: f64, rho: f64, method: NoiseMethod) -> Result<Self> {
        if !(hurst > 0.0 && hurst <= 0.5) {
            return Err(Error::param("hurst", format!("{hurst} not in (0, 1/2]")));
        }
        if !(-1.0..=1.0).contains(&rho) {
            return Err(Error::param("rho", format!("{rho} not in [-1, 1]")));
        }
        if method == NoiseMethod::Custom {
            return Err(Error::param("method", "custom paths cannot be sampled"));
        }
        Ok(NoiseSpec {
            grid,
            hurst,
            rho,
            method,
        })
    }
}

/// One sample of the pair `(W, X)` on a grid.
///
/// `X` is the Riemann–Liouville fBm of the driver `B = ρ W + √(1-ρ²) W^⊥`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointNoise {
    pub grid: Grid,
    pub hurst: f64,
    pub rho: f64,
    pub method: NoiseMethod,
    /// `W_{t_k}`, `k = 0..=n`.
    pub w: Vec<f64>,
    /// `X_{t_k}`, `k = 0..=n`.
    pub x: Vec<f64>,
    /// Increments of the driver `B`, when known.
    pub driver: Option<Vec<f64>>,
}

impl JointNoise {
    /// Wraps caller-supplied paths (values at every grid point).
    pub fn from_paths(grid: Grid, hurst: f64, w: Vec<f64>, x: Vec<f64>) -> Result<Self> {
        for v in [&w, &x] {
            if v.len() != grid.n + 1 {
                return Err(Error::LengthMismatch {
                    expected: grid.n + 1,
                    actual: v.len(),
                });
            }
        }
        Ok(JointNoise {
            grid,
            hurst,
            rho: f64::NAN,
            method: NoiseMethod::Custom,
            w,
            x,
            driver: None,
        })
    }

    pub fn dw(&self, k: usize) -> f64 {
        self.w[k + 1] - self.w[k]
    }

    pub fn w_increments(&self) -> Vec<f64> {
        self.w.windows(2).map(|p| p[1] - p[0]).collect()
    }

    /// Keeps every `factor`-th grid point.
    pub fn subsample(&self, factor: usize) -> Result<JointNoise> {
        let grid = self.grid.coarsen(factor)?;
        let pick = |v: &[f64]| v.iter().step_by(factor).copied().collect::<Vec<_>>();
        let driver = self
            .driver
            .as_ref()
            .map(|d| d.chunks(factor).map(|c| c.iter().sum()).collect());
        Ok(JointNoise {
            grid,
            hurst: self.hurst,
            rho: self.rho,
            method: self.method,
            w: pick(&self.w),
            x: pick(&self.x),
            driver,
        })
    }

    /// Restriction to `[0, t_k]`.
    pub fn truncate(&self, k: usize) -> Result<JointNoise> {
        Ok(JointNoise {
            grid: self.grid.truncate(k)?,
            hurst: self.hurst,
            rho: self.rho,
            method: self.method,
            w: self.w[..=k].to_vec(),
            x: self.x[..=k].to_vec(),
            driver: self.driver.as_ref().map(|d| d[..k].to_vec()),
        })
    }
}

/// Samples paths `first..first+count` in parallel. The result does not depend
/// on the thread count.
pub fn sample_batch(
    sampler: &FbmSampler,
    rng: &RngPolicy,
    first: u64,
    count: usize,
) -> Vec<JointNoise> {
    (0..count as u64)
        .into_par_iter()
        .map(|i| sampler.sample(rng, first + i))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_alignment() {
        let g = Grid::new(1.0, 10).unwrap();
        assert_eq!(g.index_of(0.3).unwrap(), 3);
        assert_eq!(g.index_of(1.0).unwrap(), 10);
        assert!(g.index_of(0.35).is_err());
        assert!(g.index_of(1.1).is_err());
        assert_eq!(g.time(10), 1.0);
        assert!(Grid::with_mesh(1.0, 0.3).is_err());
        assert_eq!(Grid::with_mesh(1.0, 0.001).unwrap().n, 1000);
    }

    #[test]
    fn streams_are_deterministic_and_distinct() {
        let rng = RngPolicy::new(42);
        let a: Vec<f64> = {
            let mut s = rng.normals(StreamTag::Brownian, 7);
            (0..5).map(|_| s.next_normal()).collect()
        };
        let b: Vec<f64> = {
            let mut s = rng.normals(StreamTag::Brownian, 7);
            (0..5).map(|_| s.next_normal()).collect()
        };
        let c: Vec<f64> = {
            let mut s = rng.normals(StreamTag::Brownian, 8);
            (0..5).map(|_| s.next_normal()).collect()
        };
        let d: Vec<f64> = {
            let mut s = rng.normals(StreamTag::Orthogonal, 7);
            (0..5).map(|_| s.next_normal()).collect()
        };
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }

    #[test]
    fn normal_moments() {
        let mut s = RngPolicy::new(1).normals(StreamTag::Brownian, 0);
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| s.next_normal()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.01, "{mean}");
        assert!((var - 1.0).abs() < 0.01, "{var}");
    }

    #[test]
    fn brownian_starts_at_zero() {
        let g = Grid::new(1.0, 64).unwrap();
        let w = sample_brownian(&g, &RngPolicy::new(3), 0);
        assert_eq!(w.len(), 65);
        assert_eq!(w[0], 0.0);
    }

    #[test]
    fn subsample_keeps_grid_values() {
        let g = Grid::new(1.0, 8).unwrap();
        let sampler = FbmSampler::new(NoiseSpec::new(g, 0.3, 0.5, NoiseMethod::ExactRl).unwrap());
        let noise = sampler.sample(&RngPolicy::new(9), 0);
        let coarse = noise.subsample(4).unwrap();
        assert_eq!(coarse.w, vec![noise.w[0], noise.w[4], noise.w[8]]);
        assert_eq!(coarse.x, vec![noise.x[0], noise.x[4], noise.x[8]]);
        assert!(noise.subsample(3).is_err());
    }
}
