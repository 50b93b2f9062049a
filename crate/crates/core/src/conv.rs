//! Linear convolution with a fixed kernel, via FFT for long inputs.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

/// Below this many multiply-adds the direct sum is cheaper than two FFTs.
const DIRECT_LIMIT: usize = 1 << 16;

/// Precomputed convolution against a fixed kernel, for signals up to
/// `max_signal` samples. Shareable across threads.
#[derive(Clone)]
pub(crate) struct Convolver {
    kernel: Vec<f64>,
    max_signal: usize,
    fft: Option<FftParts>,
}

#[derive(Clone)]
struct FftParts {
    size: usize,
    kernel_hat: Vec<Complex<f64>>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Convolver {
    pub(crate) fn new(kernel: Vec<f64>, max_signal: usize) -> Self {
        let fft = if kernel.len().saturating_mul(max_signal) <= DIRECT_LIMIT {
            None
        } else {
            let size = (kernel.len() + max_signal).next_power_of_two();
            let mut planner = FftPlanner::new();
            let fwd = planner.plan_fft_forward(size);
            let inv = planner.plan_fft_inverse(size);
            let mut kernel_hat: Vec<Complex<f64>> = kernel
                .iter()
                .map(|&k| Complex::new(k, 0.0))
                .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
                .take(size)
                .collect();
            fwd.process(&mut kernel_hat);
            Some(FftParts {
                size,
                kernel_hat,
                fwd,
                inv,
            })
        };
        Convolver {
            kernel,
            max_signal,
            fft,
        }
    }

    /// Full linear convolution, `signal.len() + kernel.len() - 1` samples.
    pub(crate) fn full(&self, signal: &[f64]) -> Vec<f64> {
        assert!(
            signal.len() <= self.max_signal,
            "signal longer than planned"
        );
        if signal.is_empty() || self.kernel.is_empty() {
            return Vec::new();
        }
        let out_len = signal.len() + self.kernel.len() - 1;
        match &self.fft {
            None => {
                let mut out = vec![0.0; out_len];
                for (i, &s) in signal.iter().enumerate() {
                    if s == 0.0 {
                        continue;
                    }
                    for (j, &k) in self.kernel.iter().enumerate() {
                        out[i + j] += s * k;
                    }
                }
                out
            }
            Some(p) => {
                let mut buf: Vec<Complex<f64>> = signal
                    .iter()
                    .map(|&s| Complex::new(s, 0.0))
                    .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
                    .take(p.size)
                    .collect();
                p.fwd.process(&mut buf);
                for (b, k) in buf.iter_mut().zip(&p.kernel_hat) {
                    *b *= *k;
                }
                p.inv.process(&mut buf);
                let scale = 1.0 / p.size as f64;
                buf[..out_len].iter().map(|c| c.re * scale).collect()
            }
        }
    }

    /// Causal part: `out[k] = Σ_{j ≤ k} kernel[j] signal[k - j]` for each input index.
    pub(crate) fn causal(&self, signal: &[f64]) -> Vec<f64> {
        let mut out = self.full(signal);
        out.truncate(signal.len());
        out
    }
}
