use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Exact rational coefficient used throughout the shuffle algebra.
pub type Coeff = Ratio<i64>;

/// Tolerance for weight comparisons when the Hurst index is not rational.
pub const WEIGHT_TOL: f64 = 1e-12;

/// A letter of the merged alphabet `[e] ⊔ [d] ⊔ {t}`.
///
/// The derived order puts X-letters before W-letters before the time letter,
/// which is the order used when printing and sorting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Letter {
    /// Coordinate of the rough path `X` (weight `H`).
    X(u8),
    /// Coordinate of the Brownian motion `W` (weight ½).
    W(u8),
    /// The drift letter (weight 1).
    Time,
}

impl Letter {
    /// Literal character: digits for X-letters, `a..s` for W-letters, `t` for time.
    pub fn to_char(self) -> char {
        match self {
            Letter::X(i) => char::from(b'0' + i),
            Letter::W(j) => char::from(b'a' + j),
            Letter::Time => 't',
        }
    }

    pub fn from_char(c: char) -> Option<Letter> {
        match c {
            '0'..='9' => Some(Letter::X(c as u8 - b'0')),
            't' => Some(Letter::Time),
            'a'..='s' => Some(Letter::W(c as u8 - b'a')),
            _ => None,
        }
    }

    pub fn is_x(self) -> bool {
        matches!(self, Letter::X(_))
    }

    pub fn is_w(self) -> bool {
        matches!(self, Letter::W(_))
    }
}

/// A word over the merged alphabet. The empty word is the unit.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Word(Vec<Letter>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn new(letters: Vec<Letter>) -> Self {
        Word(letters)
    }

    /// `0^n`, the word of `n` copies of the X-letter 0.
    pub fn x_power(n: usize) -> Self {
        Word(vec![Letter::X(0); n])
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Concatenation `self · other`.
    pub fn concat(&self, other: &Word) -> Word {
        let mut v = Vec::with_capacity(self.len() + other.len());
        v.extend_from_slice(&self.0);
        v.extend_from_slice(&other.0);
        Word(v)
    }

    pub fn push(&mut self, l: Letter) {
        self.0.push(l);
    }

    pub fn slice(&self, from: usize, to: usize) -> Word {
        Word(self.0[from..to].to_vec())
    }

    pub fn count_x(&self) -> usize {
        self.0.iter().filter(|l| l.is_x()).count()
    }

    pub fn count_w(&self) -> usize {
        self.0.iter().filter(|l| l.is_w()).count()
    }

    pub fn count_time(&self) -> usize {
        self.0.iter().filter(|l| **l == Letter::Time).count()
    }

    pub fn is_x_only(&self) -> bool {
        self.0.iter().all(|l| l.is_x())
    }
}

// Graded-lexicographic: shorter words first, then letterwise.
impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len()
            .cmp(&other.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "ε");
        }
        for l in &self.0 {
            write!(f, "{}", l.to_char())?;
        }
        Ok(())
    }
}

impl FromStr for Word {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() || s == "ε" {
            return Ok(Word::empty());
        }
        s.chars()
            .map(|c| {
                Letter::from_char(c).ok_or_else(|| Error::BadWordLiteral {
                    literal: s.to_string(),
                    reason: format!("unknown letter `{c}`"),
                })
            })
            .collect::<Result<Vec<_>>>()
            .map(Word)
    }
}

/// Parses a word literal, panicking on malformed input. Intended for tests
/// and hard-coded constants.
pub fn w(lit: &str) -> Word {
    lit.parse().expect("valid word literal")
}

/// Weight of the X-letters: exact rational when possible.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HurstWeight {
    Rational(Coeff),
    Real(f64),
}

/// The weighted alphabet with `e` X-letters and `d` W-letters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Alphabet {
    pub e: u8,
    pub d: u8,
    pub hurst: HurstWeight,
}

impl Alphabet {
    /// Builds an alphabet, recovering an exact rational weight for `hurst`
    /// whenever a fraction with denominator ≤ 10⁶ reproduces it.
    pub fn new(e: u8, d: u8, hurst: f64) -> Result<Self> {
        if !(hurst > 0.0 && hurst <= 0.5) {
            return Err(Error::param("hurst", format!("{hurst} not in (0, 1/2]")));
        }
        if e == 0 || e > 10 || d == 0 || d > 19 {
            return Err(Error::param("alphabet", format!("e = {e}, d = {d}")));
        }
        let weight = match rational_from_f64(hurst) {
            Some(r) => HurstWeight::Rational(r),
            None => HurstWeight::Real(hurst),
        };
        Ok(Alphabet {
            e,
            d,
            hurst: weight,
        })
    }

    /// One X-letter and one W-letter, the case used from the model onwards.
    pub fn scalar(hurst: f64) -> Result<Self> {
        Alphabet::new(1, 1, hurst)
    }

    pub fn hurst(&self) -> f64 {
        match self.hurst {
            HurstWeight::Rational(r) => r.to_f64().unwrap_or(f64::NAN),
            HurstWeight::Real(h) => h,
        }
    }

    pub fn letter_weight(&self, l: Letter) -> f64 {
        match l {
            Letter::X(_) => self.hurst(),
            Letter::W(_) => 0.5,
            Letter::Time => 1.0,
        }
    }

    pub fn contains(&self, l: Letter) -> bool {
        match l {
            Letter::X(i) => i < self.e,
            Letter::W(j) => j < self.d,
            Letter::Time => true,
        }
    }

    pub fn weight(&self, word: &Word) -> f64 {
        word.letters().iter().map(|&l| self.letter_weight(l)).sum()
    }

    /// Exact weight when the Hurst index is rational.
    pub fn exact_weight(&self, word: &Word) -> Option<Coeff> {
        match self.hurst {
            HurstWeight::Rational(h) => {
                let nx = word.count_x() as i64;
                let nw = word.count_w() as i64;
                let nt = word.count_time() as i64;
                Some(h * nx + Coeff::new(nw, 2) + Coeff::from_integer(nt))
            }
            HurstWeight::Real(_) => None,
        }
    }

    /// `|word| ≤ bound`, exactly for rational weights and up to
    /// [`WEIGHT_TOL`] otherwise.
    pub fn weight_at_most(&self, word: &Word, bound: Coeff) -> bool {
        match self.exact_weight(word) {
            Some(wt) => wt <= bound,
            None => self.weight(word) <= bound.to_f64().unwrap() + WEIGHT_TOL,
        }
    }

    pub fn within_unit(&self, word: &Word) -> bool {
        self.weight_at_most(word, Coeff::from_integer(1))
    }

    fn x_letters(&self) -> impl Iterator<Item = Letter> + '_ {
        (0..self.e).map(Letter::X)
    }

    fn w_letters(&self) -> impl Iterator<Item = Letter> + '_ {
        (0..self.d).map(Letter::W)
    }

    /// Every non-empty word of weight ≤ 1, in graded-lexicographic order.
    pub fn words_up_to_unit_weight(&self) -> Vec<Word> {
        let mut out = Vec::new();
        let mut frontier = vec![Word::empty()];
        let letters: Vec<Letter> = self
            .x_letters()
            .chain(self.w_letters())
            .chain(std::iter::once(Letter::Time))
            .collect();
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for base in &frontier {
                for &l in &letters {
                    let mut cand = base.clone();
                    cand.push(l);
                    if self.within_unit(&cand) {
                        next.push(cand);
                    }
                }
            }
            out.extend(next.iter().cloned());
            frontier = next;
        }
        out.sort();
        out
    }

    pub fn check_word(&self, word: &Word) -> Result<()> {
        if let Some(l) = word.letters().iter().find(|l| !self.contains(**l)) {
            return Err(Error::BadWordLiteral {
                literal: word.to_string(),
                reason: format!("letter `{}` outside the alphabet", l.to_char()),
            });
        }
        Ok(())
    }
}

fn rational_from_f64(x: f64) -> Option<Coeff> {
    // Continued fractions with a bounded denominator.
    let (mut h0, mut h1) = (0i64, 1i64);
    let (mut k0, mut k1) = (1i64, 0i64);
    let mut v = x;
    for _ in 0..40 {
        let a = v.floor();
        if a.abs() > 1e9 {
            break;
        }
        let ai = a as i64;
        let h2 = ai.checked_mul(h1)?.checked_add(h0)?;
        let k2 = ai.checked_mul(k1)?.checked_add(k0)?;
        if k2 > 1_000_000 {
            break;
        }
        h0 = h1;
        h1 = h2;
        k0 = k1;
        k1 = k2;
        if (h1 as f64 / k1 as f64 - x).abs() <= f64::EPSILON * x.abs() {
            return Some(Coeff::new(h1, k1));
        }
        let frac = v - a;
        if frac.is_zero() {
            break;
        }
        v = 1.0 / frac;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literal_round_trip() {
        for lit in ["0a00", "a", "ab", "t", "0", "9s"] {
            assert_eq!(w(lit).to_string(), lit);
        }
        assert!(Word::from_str("0x").is_err());
        assert!(w("").is_empty());
    }

    #[test]
    fn rational_weights() {
        let a = Alphabet::scalar(0.1).unwrap();
        assert_eq!(a.hurst, HurstWeight::Rational(Coeff::new(1, 10)));
        assert_eq!(a.exact_weight(&w("00000a")), Some(Coeff::from_integer(1)));
        assert!(a.within_unit(&w("00000a")));
        assert!(!a.within_unit(&w("000000a")));
        assert_eq!(a.exact_weight(&Word::empty()), Some(Coeff::from_integer(0)));
        let irr = Alphabet::scalar(std::f64::consts::FRAC_1_PI).unwrap();
        assert!(matches!(irr.hurst, HurstWeight::Real(_)));
        assert!(irr.within_unit(&w("0a")));
    }

    #[test]
    fn hurst_range_is_checked() {
        assert!(Alphabet::scalar(0.0).is_err());
        assert!(Alphabet::scalar(0.6).is_err());
        assert!(Alphabet::scalar(0.5).is_ok());
    }

    #[test]
    fn unit_weight_words_h03() {
        let a = Alphabet::scalar(0.3).unwrap();
        let words: Vec<String> = a
            .words_up_to_unit_weight()
            .iter()
            .map(|w| w.to_string())
            .collect();
        assert_eq!(words, vec!["0", "a", "t", "00", "0a", "a0", "aa", "000"]);
    }

    #[test]
    fn graded_lex_order() {
        let mut v = vec![w("a0"), w("0"), w("00a"), w("0a")];
        v.sort();
        let s: Vec<String> = v.iter().map(|w| w.to_string()).collect();
        assert_eq!(s, vec!["0", "0a", "a0", "00a"]);
    }
}
