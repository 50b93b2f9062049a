use super::{
    brownian_increments, cumulative, Grid, JointNoise, NoiseMethod, NoiseSpec, RngPolicy, StreamTag,
};
use crate::conv::Convolver;
use crate::error::{Error, Result};

/// Interval-averaged Riemann–Liouville kernel
/// `c_j = Δ^ζ (j^{ζ+1} − (j−1)^{ζ+1}) / (ζ+1)`, `j = 1..=n`, `ζ = H − ½`.
///
/// `c_j` is the mean of `(t_k − s)^ζ` over the cell `j` steps back, which is
/// also the optimal hybrid-scheme weight `(b*_j Δ)^ζ`.
pub fn fbm_kernel(hurst: f64, dt: f64, n: usize) -> Vec<f64> {
    let zeta = hurst - 0.5;
    let scale = dt.powf(zeta) / (zeta + 1.0);
    (1..=n)
        .map(|j| {
            let j = j as f64;
            scale * (j.powf(zeta + 1.0) - (j - 1.0).powf(zeta + 1.0))
        })
        .collect()
}

/// Standard deviation of the part of `∫_{t_{k-1}}^{t_k} (t_k − s)^ζ dB_s`
/// not explained by `ΔB_k`: the hybrid scheme's independent correction.
pub fn hybrid_residual_std(hurst: f64, dt: f64) -> f64 {
    let var = dt.powf(2.0 * hurst) * (1.0 / (2.0 * hurst) - 1.0 / (hurst + 0.5).powi(2));
    var.max(0.0).sqrt()
}

/// Sampler for [`JointNoise`] with the convolution kernel planned once.
#[derive(Clone)]
pub struct FbmSampler {
    spec: NoiseSpec,
    conv: Option<Convolver>,
    residual_std: f64,
}

impl FbmSampler {
    pub fn new(spec: NoiseSpec) -> Self {
        let g = spec.grid;
        let conv = if spec.hurst == 0.5 {
            None
        } else {
            Some(Convolver::new(fbm_kernel(spec.hurst, g.dt(), g.n), g.n))
        };
        FbmSampler {
            residual_std: hybrid_residual_std(spec.hurst, g.dt()),
            spec,
            conv,
        }
    }

    pub fn spec(&self) -> &NoiseSpec {
        &self.spec
    }

    /// Draws path number `path_index`.
    pub fn sample(&self, rng: &RngPolicy, path_index: u64) -> JointNoise {
        let g = self.spec.grid;
        let dw = brownian_increments(&g, rng, StreamTag::Brownian, path_index);
        let rho = self.spec.rho;
        let driver: Vec<f64> = if rho == 1.0 {
            dw.clone()
        } else {
            let rho_bar = (1.0 - rho * rho).max(0.0).sqrt();
            let perp = brownian_increments(&g, rng, StreamTag::Orthogonal, path_index);
            dw.iter()
                .zip(&perp)
                .map(|(a, b)| rho * a + rho_bar * b)
                .collect()
        };
        let x = match &self.conv {
            // H = ½: the kernel is identically one and X is B itself.
            None => cumulative(&driver),
            Some(conv) => {
                let s = (2.0 * self.spec.hurst).sqrt();
                let y = conv.causal(&driver);
                let mut x = Vec::with_capacity(g.n + 1);
                x.push(0.0);
                match self.spec.method {
                    NoiseMethod::Hybrid => {
                        let mut z = vec![0.0; g.n];
                        rng.normals(StreamTag::HybridCorrection, path_index)
                            .fill(&mut z, self.residual_std);
                        x.extend(y.iter().zip(&z).map(|(a, b)| s * (a + b)));
                    }
                    _ => x.extend(y.iter().map(|a| s * a)),
                }
                x
            }
        };
        JointNoise {
            grid: g,
            hurst: self.spec.hurst,
            rho,
            method: self.spec.method,
            w: cumulative(&dw),
            x,
            driver: Some(driver),
        }
    }
}

/// Hybrid-scheme path on a coarse grid built from the increments of a finer
/// driver: the most recent coarse cell is integrated exactly against the
/// fine increments inside it, earlier cells use the coarse averaged kernel.
///
/// This couples a coarse hybrid path to a fine reference path of the same
/// driver, which is what convergence studies need.
#[derive(Clone)]
pub struct HybridRefiner {
    factor: usize,
    coarse: Option<Convolver>,
    fine_kernel: Vec<f64>,
    scale: f64,
    n_coarse: usize,
}

impl HybridRefiner {
    pub fn new(hurst: f64, fine: Grid, factor: usize) -> Result<Self> {
        let coarse = fine.coarsen(factor)?;
        if !(hurst > 0.0 && hurst <= 0.5) {
            return Err(Error::param("hurst", format!("{hurst} not in (0, 1/2]")));
        }
        let mut k = fbm_kernel(hurst, coarse.dt(), coarse.n);
        k[0] = 0.0;
        Ok(HybridRefiner {
            factor,
            coarse: Some(Convolver::new(k, coarse.n)),
            fine_kernel: fbm_kernel(hurst, fine.dt(), factor),
            scale: (2.0 * hurst).sqrt(),
            n_coarse: coarse.n,
        })
    }

    /// Coarse path values (length `n_coarse + 1`) from fine driver increments.
    pub fn coarse_path(&self, fine_driver: &[f64]) -> Result<Vec<f64>> {
        let r = self.factor;
        if fine_driver.len() != self.n_coarse * r {
            return Err(Error::LengthMismatch {
                expected: self.n_coarse * r,
                actual: fine_driver.len(),
            });
        }
        let coarse_db: Vec<f64> = fine_driver.chunks(r).map(|c| c.iter().sum()).collect();
        let far = self.coarse.as_ref().map(|c| c.causal(&coarse_db));
        let mut x = Vec::with_capacity(self.n_coarse + 1);
        x.push(0.0);
        for (m, cell) in fine_driver.chunks(r).enumerate() {
            // c^f_l multiplies the increment l fine steps before the cell end
            let near: f64 = cell
                .iter()
                .rev()
                .zip(&self.fine_kernel)
                .map(|(db, c)| db * c)
                .sum();
            let far_m = far.as_ref().map_or(0.0, |f| f[m]);
            x.push(self.scale * (near + far_m));
        }
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_first_cell_matches_conditional_mean() {
        // E[∫_0^Δ s^ζ dB | ΔB] = ΔB · Δ^ζ/(ζ+1)
        let h = 0.2;
        let dt = 0.01;
        let c = fbm_kernel(h, dt, 3);
        let zeta = h - 0.5;
        assert!((c[0] - dt.powf(zeta) / (zeta + 1.0)).abs() < 1e-14);
        // correction variance + explained variance = Δ^{2H}/(2H)
        let explained = c[0] * c[0] * dt;
        let total = dt.powf(2.0 * h) / (2.0 * h);
        let res = hybrid_residual_std(h, dt);
        assert!((explained + res * res - total).abs() < 1e-14);
    }

    #[test]
    fn half_reproduces_brownian_exactly() {
        let g = Grid::new(1.0, 100).unwrap();
        for method in [NoiseMethod::Hybrid, NoiseMethod::ExactRl] {
            let s = FbmSampler::new(NoiseSpec::new(g, 0.5, 1.0, method).unwrap());
            let n = s.sample(&RngPolicy::new(5), 3);
            assert_eq!(n.x, n.w);
        }
    }

    #[test]
    fn exact_convolution_direct_check() {
        let g = Grid::new(1.0, 6).unwrap();
        let spec = NoiseSpec::new(g, 0.25, 1.0, NoiseMethod::ExactRl).unwrap();
        let n = FbmSampler::new(spec).sample(&RngPolicy::new(1), 0);
        let c = fbm_kernel(0.25, g.dt(), 6);
        let dw = n.w_increments();
        for k in 1..=6 {
            let direct: f64 = (0..k).map(|i| c[k - 1 - i] * dw[i]).sum::<f64>() * 0.5f64.sqrt();
            assert!((direct - n.x[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn refiner_with_unit_factor_is_exact_scheme() {
        let g = Grid::new(1.0, 32).unwrap();
        let spec = NoiseSpec::new(g, 0.1, 0.7, NoiseMethod::ExactRl).unwrap();
        let n = FbmSampler::new(spec).sample(&RngPolicy::new(2), 4);
        let r = HybridRefiner::new(0.1, g, 1).unwrap();
        let x = r.coarse_path(n.driver.as_ref().unwrap()).unwrap();
        for (a, b) in x.iter().zip(&n.x) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
