//! Monte Carlo checks of the algebraic identities satisfied by the lift.
//!
//! Each identity is turned into a per-path difference `D`; a check passes
//! when `|mean D| ≤ 4·stderr` (plus a rounding floor) and the RMS of `D` is
//! negligible against the RMS of the terms involved.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::decompose::{is_generator, Decomposer, GeneratorPolynomial, Monomial};
use super::lift::{itolift_binomial, LiftSample};
use super::polynomial::{deconcatenate, shuffle, WordPolynomial};
use super::word::{Alphabet, Coeff, Word};
use crate::error::{Error, Result};
use crate::noise::{FbmSampler, Grid, NoiseMethod, NoiseSpec, RngPolicy};
use crate::stats::{loglog_fit, rms, Summary};

/// Relative size of `D` below which it counts as rounding noise.
const ROUNDING_REL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub hurst: f64,
    pub rho: f64,
    pub method: NoiseMethod,
    pub n_paths: usize,
    pub grid: Grid,
    pub s: f64,
    pub u: f64,
    pub t: f64,
    pub seed: u64,
}

impl SuiteConfig {
    pub fn new(hurst: f64, seed: u64) -> Self {
        SuiteConfig {
            hurst,
            rho: 0.5,
            method: NoiseMethod::Hybrid,
            n_paths: 200,
            grid: Grid {
                t_end: 1.0,
                n: 1024,
            },
            s: 0.25,
            u: 0.5,
            t: 0.875,
            seed,
        }
    }
}

/// Outcome of one identity on one word (or word pair).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub suite: String,
    pub label: String,
    pub mean: f64,
    pub stderr: f64,
    pub rms_diff: f64,
    pub rms_scale: f64,
    pub passed: bool,
}

impl CheckResult {
    fn from_samples(suite: &str, label: String, diffs: &[f64], scale: &[f64]) -> Self {
        let s = Summary::of(diffs);
        let rms_diff = rms(diffs);
        let rms_scale = rms(scale).max(1e-300);
        let floor = ROUNDING_REL * (1.0 + rms_scale);
        let stat_ok = (s.mean.abs() <= 4.0 * s.stderr + floor) && s.mean.is_finite();
        let small = rms_diff <= floor;
        CheckResult {
            suite: suite.to_string(),
            label,
            mean: s.mean,
            stderr: s.stderr,
            rms_diff,
            rms_scale,
            passed: stat_ok && small,
        }
    }
}

struct PathLifts {
    st: LiftSample,
    su: LiftSample,
    ut: LiftSample,
    backward: Vec<f64>,
}

fn backward_words(alphabet: &Alphabet) -> Vec<(usize, usize)> {
    let h = alphabet.hurst();
    let mut out = Vec::new();
    for m in 0..=10 {
        for n in 0..=10 {
            let word = Word::x_power(m)
                .concat(&"a".parse::<Word>().unwrap())
                .concat(&Word::x_power(n));
            if alphabet.within_unit(&word) && (m + n) as f64 * h <= 0.5 + 1e-12 {
                out.push((m, n));
            }
        }
    }
    out
}

fn sample_lifts(cfg: &SuiteConfig) -> Result<(Alphabet, Vec<PathLifts>)> {
    if !(cfg.s < cfg.u && cfg.u < cfg.t) {
        return Err(Error::param("interval", "need s < u < t"));
    }
    if cfg.n_paths < 2 {
        return Err(Error::param("n_paths", "need at least two paths"));
    }
    let alphabet = Alphabet::scalar(cfg.hurst)?;
    let spec = NoiseSpec::new(cfg.grid, cfg.hurst, cfg.rho, cfg.method)?;
    let sampler = FbmSampler::new(spec);
    let rng = RngPolicy::new(cfg.seed);
    let bw = backward_words(&alphabet);
    let lifts = (0..cfg.n_paths as u64)
        .into_par_iter()
        .map(|p| -> Result<PathLifts> {
            let noise = sampler.sample(&rng, p);
            let backward = bw
                .iter()
                .map(|&(m, n)| itolift_binomial(m, n, &noise, cfg.s, cfg.t))
                .collect::<Result<Vec<_>>>()?;
            Ok(PathLifts {
                st: LiftSample::compute(&noise, cfg.s, cfg.t)?,
                su: LiftSample::compute(&noise, cfg.s, cfg.u)?,
                ut: LiftSample::compute(&noise, cfg.u, cfg.t)?,
                backward,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((alphabet, lifts))
}

fn coeff_f64(c: &Coeff) -> f64 {
    *c.numer() as f64 / *c.denom() as f64
}

fn chen(alphabet: &Alphabet, lifts: &[PathLifts]) -> Vec<CheckResult> {
    alphabet
        .words_up_to_unit_weight()
        .into_iter()
        .map(|word| {
            let split = deconcatenate(&word);
            let (diffs, scale): (Vec<f64>, Vec<f64>) = lifts
                .iter()
                .map(|l| {
                    let lhs = l.st.get(&word).unwrap();
                    let rhs: f64 = split
                        .iter()
                        .map(|(a, b)| l.su.get(a).unwrap() * l.ut.get(b).unwrap())
                        .sum();
                    (lhs - rhs, lhs)
                })
                .unzip();
            CheckResult::from_samples("chen", word.to_string(), &diffs, &scale)
        })
        .collect()
}

fn shuffle_identity(alphabet: &Alphabet, lifts: &[PathLifts]) -> Vec<CheckResult> {
    let words = alphabet.words_up_to_unit_weight();
    let mut out = Vec::new();
    for (i, a) in words.iter().enumerate() {
        for b in &words[i..] {
            let joint = a.concat(b);
            if !alphabet.within_unit(&joint) {
                continue;
            }
            let prod = shuffle(a, b);
            let (diffs, scale): (Vec<f64>, Vec<f64>) = lifts
                .iter()
                .map(|l| {
                    let lhs = l.st.get(a).unwrap() * l.st.get(b).unwrap();
                    let rhs: f64 = prod
                        .iter()
                        .map(|(w, c)| coeff_f64(c) * l.st.get(w).unwrap())
                        .sum();
                    (lhs - rhs, lhs)
                })
                .unzip();
            out.push(CheckResult::from_samples(
                "shuffle",
                format!("{a}⧢{b}"),
                &diffs,
                &scale,
            ));
        }
    }
    out
}

fn backward(alphabet: &Alphabet, lifts: &[PathLifts]) -> Vec<CheckResult> {
    backward_words(alphabet)
        .into_iter()
        .enumerate()
        .map(|(i, (m, n))| {
            let word = Word::x_power(m)
                .concat(&"a".parse::<Word>().unwrap())
                .concat(&Word::x_power(n));
            let (diffs, scale): (Vec<f64>, Vec<f64>) = lifts
                .iter()
                .map(|l| {
                    let lhs = l.st.get(&word).unwrap();
                    (lhs - l.backward[i], lhs)
                })
                .unzip();
            CheckResult::from_samples("backward", word.to_string(), &diffs, &scale)
        })
        .collect()
}

/// Chen's relation `L(w)_{st} = Σ L(u)_{su} L(v)_{ut}` over `Δw`.
pub fn chen_suite(cfg: &SuiteConfig) -> Result<Vec<CheckResult>> {
    let (a, l) = sample_lifts(cfg)?;
    Ok(chen(&a, &l))
}

/// `L(a) L(b) = L(a ⧢ b)` for all pairs with `|a| + |b| ≤ 1`.
pub fn shuffle_suite(cfg: &SuiteConfig) -> Result<Vec<CheckResult>> {
    let (a, l) = sample_lifts(cfg)?;
    Ok(shuffle_identity(&a, &l))
}

/// The decomposition value of `0^m γ 0^n` against the direct backward sum.
pub fn backward_integral_suite(cfg: &SuiteConfig) -> Result<Vec<CheckResult>> {
    let (a, l) = sample_lifts(cfg)?;
    Ok(backward(&a, &l))
}

/// Empirical L² scaling exponent of one word over dyadic interval lengths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderCheck {
    pub word: String,
    pub weight: f64,
    pub slope: f64,
    pub passed: bool,
}

/// Fits `log ‖L(w)_{0,h}‖₂` against `log h` for `h = 2^-1 .. 2^-levels` and
/// requires a slope of at least `|w| − 0.1`.
pub fn holder_scaling_suite(cfg: &SuiteConfig, levels: u32) -> Result<Vec<HolderCheck>> {
    let alphabet = Alphabet::scalar(cfg.hurst)?;
    let spec = NoiseSpec::new(cfg.grid, cfg.hurst, cfg.rho, cfg.method)?;
    let sampler = FbmSampler::new(spec);
    let rng = RngPolicy::new(cfg.seed).derive(17);
    let lengths: Vec<f64> = (1..=levels)
        .map(|k| cfg.grid.t_end * 0.5f64.powi(k as i32))
        .collect();
    let words = alphabet.words_up_to_unit_weight();
    // per path, per length, per word
    let values = (0..cfg.n_paths as u64)
        .into_par_iter()
        .map(|p| -> Result<Vec<LiftSample>> {
            let noise = sampler.sample(&rng, p);
            lengths
                .iter()
                .map(|&h| LiftSample::compute(&noise, 0.0, h))
                .collect()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(words
        .iter()
        .map(|word| {
            let norms: Vec<f64> = (0..lengths.len())
                .map(|li| {
                    let xs: Vec<f64> = values.iter().map(|v| v[li].get(word).unwrap()).collect();
                    rms(&xs)
                })
                .collect();
            let weight = alphabet.weight(word);
            let slope = loglog_fit(&lengths, &norms)
                .map(|f| f.slope)
                .unwrap_or(f64::NAN);
            HolderCheck {
                word: word.to_string(),
                weight,
                slope,
                passed: slope >= weight - 0.1,
            }
        })
        .collect())
}

/// `i α j k = iα⧢jk − ijα⧢k + ikjα + kijα − jiα⧢k + kjiα`, with `i, j, k`
/// the X-letters `0, 1, 2` and `α` the W-letter `a`.
pub fn iajk_expected() -> GeneratorPolynomial {
    let mono = |parts: &[&str]| {
        parts.iter().fold(Monomial::unit(), |m, s| {
            m.mul(&Monomial::single(s.parse().unwrap()))
        })
    };
    let mut p = GeneratorPolynomial::zero();
    let (one, minus) = (Coeff::from_integer(1), Coeff::from_integer(-1));
    p.add_term(mono(&["0a", "12"]), one);
    p.add_term(mono(&["01a", "2"]), minus);
    p.add_term(mono(&["021a"]), one);
    p.add_term(mono(&["201a"]), one);
    p.add_term(mono(&["10a", "2"]), minus);
    p.add_term(mono(&["210a"]), one);
    p
}

/// Exact (rational) checks of the generator decomposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactnessReport {
    pub hurst: f64,
    /// `0a12` decomposes term for term as [`iajk_expected`]; `None` when
    /// its weight `3H + ½` exceeds one.
    pub iajk: Option<bool>,
    /// Words of weight ≤ 1 over three X-letters and two W-letters.
    pub words_checked: usize,
    /// Words whose decomposition is not made of generators or does not
    /// expand back to the word.
    pub failures: Vec<String>,
    /// A word of weight > 1 is rejected.
    pub overweight_rejected: bool,
}

impl ExactnessReport {
    pub fn passed(&self) -> bool {
        self.iajk != Some(false)
            && self.failures.is_empty()
            && self.overweight_rejected
            && self.words_checked > 0
    }
}

pub fn exactness_checks(hurst: f64) -> Result<ExactnessReport> {
    let alphabet = Alphabet::new(3, 2, hurst)?;
    let mut d = Decomposer::new(alphabet);
    let iajk_word: Word = "0a12".parse()?;
    let iajk = if alphabet.within_unit(&iajk_word) {
        Some(d.decompose(&iajk_word)? == iajk_expected())
    } else {
        None
    };
    let words = alphabet.words_up_to_unit_weight();
    let mut failures = Vec::new();
    for word in &words {
        let p = d.decompose(word)?;
        let generators_only = p
            .iter()
            .all(|(m, _)| m.factors().iter().all(|f| is_generator(f, &alphabet)));
        if !generators_only || p.expand() != WordPolynomial::from_word(word.clone()) {
            failures.push(word.to_string());
        }
    }
    // shortest X-power of weight > 1
    let heavy = Word::x_power((1.0 / hurst).floor() as usize + 1);
    let overweight_rejected = d.decompose(&heavy).is_err();
    Ok(ExactnessReport {
        hurst,
        iajk,
        words_checked: words.len(),
        failures,
        overweight_rejected,
    })
}

/// All identity suites on one shared set of samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub chen: Vec<CheckResult>,
    pub shuffle: Vec<CheckResult>,
    pub backward: Vec<CheckResult>,
    pub holder: Vec<HolderCheck>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.chen
            .iter()
            .chain(&self.shuffle)
            .chain(&self.backward)
            .all(|c| c.passed)
            && self.holder.iter().all(|h| h.passed)
    }
}

pub fn run_all(cfg: &SuiteConfig, holder_levels: u32) -> Result<VerifyReport> {
    let (a, l) = sample_lifts(cfg)?;
    Ok(VerifyReport {
        chen: chen(&a, &l),
        shuffle: shuffle_identity(&a, &l),
        backward: backward(&a, &l),
        holder: holder_scaling_suite(cfg, holder_levels)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(h: f64) -> SuiteConfig {
        SuiteConfig {
            n_paths: 20,
            grid: Grid { t_end: 1.0, n: 256 },
            ..SuiteConfig::new(h, 3)
        }
    }

    #[test]
    fn identities_hold_on_small_batch() {
        for h in [0.1, 0.25] {
            let cfg = small(h);
            for c in chen_suite(&cfg).unwrap() {
                assert!(c.passed, "{c:?}");
            }
            for c in shuffle_suite(&cfg).unwrap() {
                assert!(c.passed, "{c:?}");
            }
            for c in backward_integral_suite(&cfg).unwrap() {
                assert!(c.passed, "{c:?}");
            }
        }
    }

    #[test]
    fn exactness_for_small_hurst() {
        let r = exactness_checks(0.1).unwrap();
        assert!(r.passed(), "{r:?}");
        assert_eq!(r.iajk, Some(true));
        let r = exactness_checks(0.25).unwrap();
        assert!(r.passed(), "{r:?}");
        assert_eq!(r.iajk, None);
        assert!(r.words_checked > 20);
    }

    #[test]
    fn bad_interval_rejected() {
        let mut cfg = small(0.25);
        cfg.u = 0.1;
        assert!(chen_suite(&cfg).is_err());
    }
}
