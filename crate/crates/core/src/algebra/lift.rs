use std::collections::HashMap;

use super::decompose::{generator_kind, Decomposer, GeneratorKind};
use super::word::{Alphabet, Letter, Word};
use crate::error::{Error, Result};
use crate::noise::JointNoise;

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn check_scalar(word: &Word) -> Result<()> {
    let ok = word.letters().iter().all(|l| match l {
        Letter::X(i) => *i == 0,
        Letter::W(j) => *j == 0,
        Letter::Time => true,
    });
    if ok {
        Ok(())
    } else {
        Err(Error::Unsupported(format!(
            "lift evaluation needs e = d = 1, got word `{word}`"
        )))
    }
}

fn interval(noise: &JointNoise, s: f64, t: f64) -> Result<(usize, usize)> {
    let (i0, i1) = (noise.grid.index_of(s)?, noise.grid.index_of(t)?);
    if i0 > i1 {
        return Err(Error::param("interval", format!("s = {s} > t = {t}")));
    }
    Ok((i0, i1))
}

fn generator_on_indices(
    kind: GeneratorKind,
    len: usize,
    noise: &JointNoise,
    i0: usize,
    i1: usize,
) -> f64 {
    let x = &noise.x;
    let w = &noise.w;
    match kind {
        GeneratorKind::XOnly => (x[i1] - x[i0]).powi(len as i32) / factorial(len),
        GeneratorKind::XThenW => {
            let m = (len - 1) as i32;
            let norm = factorial(len - 1);
            (i0..i1)
                .map(|k| (x[k] - x[i0]).powi(m) * (w[k + 1] - w[k]))
                .sum::<f64>()
                / norm
        }
        // Stratonovich midpoint sum: exactly ½ W_{st}² up to rounding.
        GeneratorKind::WW => (i0..i1)
            .map(|k| 0.5 * ((w[k] - w[i0]) + (w[k + 1] - w[i0])) * (w[k + 1] - w[k]))
            .sum(),
        GeneratorKind::Time => noise.grid.time(i1) - noise.grid.time(i0),
    }
}

/// Monte Carlo value of a generator on `[s, t]`, computed on the noise grid
/// (which serves as the fine mesh). `s` and `t` must be grid points.
pub fn evaluate_generator(word: &Word, noise: &JointNoise, s: f64, t: f64) -> Result<f64> {
    check_scalar(word)?;
    let alphabet = Alphabet::scalar(noise.hurst)?;
    let kind =
        generator_kind(word, &alphabet).ok_or_else(|| Error::NotAGenerator(word.to_string()))?;
    let (i0, i1) = interval(noise, s, t)?;
    Ok(generator_on_indices(kind, word.len(), noise, i0, i1))
}

/// Direct left-point sum for `0^m γ 0^n`:
/// `Σ_k X_t^{n−k} / (m! k! (n−k)!) Σ_u X_{s,u}^m (−X_u)^k ΔW_u`.
pub fn itolift_binomial(m: usize, n: usize, noise: &JointNoise, s: f64, t: f64) -> Result<f64> {
    let (i0, i1) = interval(noise, s, t)?;
    let x = &noise.x;
    let w = &noise.w;
    let mut total = 0.0;
    for k in 0..=n {
        let inner: f64 = (i0..i1)
            .map(|u| (x[u] - x[i0]).powi(m as i32) * (-x[u]).powi(k as i32) * (w[u + 1] - w[u]))
            .sum();
        total +=
            x[i1].powi((n - k) as i32) / (factorial(m) * factorial(k) * factorial(n - k)) * inner;
    }
    Ok(total)
}

/// Evaluates words of weight ≤ 1 through their generator decomposition,
/// caching decompositions across calls.
#[derive(Debug, Clone)]
pub struct LiftEvaluator {
    decomposer: Decomposer,
}

impl LiftEvaluator {
    pub fn new(hurst: f64) -> Result<Self> {
        Ok(LiftEvaluator {
            decomposer: Decomposer::new(Alphabet::scalar(hurst)?),
        })
    }

    pub fn alphabet(&self) -> &Alphabet {
        self.decomposer.alphabet()
    }

    pub fn evaluate(&mut self, word: &Word, noise: &JointNoise, s: f64, t: f64) -> Result<f64> {
        Ok(self.evaluate_all(std::slice::from_ref(word), noise, s, t)?[0])
    }

    /// Values of several words on the same interval, sharing generator sums.
    pub fn evaluate_all(
        &mut self,
        words: &[Word],
        noise: &JointNoise,
        s: f64,
        t: f64,
    ) -> Result<Vec<f64>> {
        let (i0, i1) = interval(noise, s, t)?;
        let alphabet = *self.decomposer.alphabet();
        let mut cache: HashMap<Word, f64> = HashMap::new();
        let mut out = Vec::with_capacity(words.len());
        for word in words {
            check_scalar(word)?;
            let poly = self.decomposer.decompose(word)?;
            let mut value = 0.0;
            for (mono, c) in poly.iter() {
                let mut prod = *c.numer() as f64 / *c.denom() as f64;
                for g in mono.factors() {
                    let v = match cache.get(g) {
                        Some(v) => *v,
                        None => {
                            let kind = generator_kind(g, &alphabet)
                                .ok_or_else(|| Error::NotAGenerator(g.to_string()))?;
                            let v = generator_on_indices(kind, g.len(), noise, i0, i1);
                            cache.insert(g.clone(), v);
                            v
                        }
                    };
                    prod *= v;
                }
                value += prod;
            }
            out.push(value);
        }
        Ok(out)
    }
}

/// The lift on one interval: every word of weight ≤ 1 with its value.
#[derive(Debug, Clone)]
pub struct LiftSample {
    pub s: f64,
    pub t: f64,
    pub entries: Vec<(Word, f64)>,
}

impl LiftSample {
    pub fn compute(noise: &JointNoise, s: f64, t: f64) -> Result<LiftSample> {
        let mut ev = LiftEvaluator::new(noise.hurst)?;
        let words = ev.alphabet().words_up_to_unit_weight();
        let values = ev.evaluate_all(&words, noise, s, t)?;
        Ok(LiftSample {
            s,
            t,
            entries: words.into_iter().zip(values).collect(),
        })
    }

    pub fn get(&self, word: &Word) -> Option<f64> {
        if word.is_empty() {
            return Some(1.0);
        }
        self.entries
            .iter()
            .find(|(w, _)| w == word)
            .map(|(_, v)| *v)
    }
}
