use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_traits::{One, Zero};

use super::polynomial::{shuffle, write_signed_terms, WordPolynomial};
use super::word::{Alphabet, Coeff, Letter, Word};
use crate::error::{Error, Result};

/// Which family of the generating set a word belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorKind {
    /// A word in the X-letters only.
    XOnly,
    /// `z γ` with `z` an X-word of weight ≤ ½ and `γ` a W-letter.
    XThenW,
    /// `α β`, two W-letters.
    WW,
    /// The single time letter.
    Time,
}

/// Classifies `word` as a generator, or returns `None`.
///
/// The time letter on its own is treated as a generator: it has weight 1, is
/// the only word of weight ≤ 1 containing it, and its lift is `t − s`.
pub fn generator_kind(word: &Word, alphabet: &Alphabet) -> Option<GeneratorKind> {
    let letters = word.letters();
    if letters.is_empty() || !alphabet.within_unit(word) {
        return None;
    }
    if word.is_x_only() {
        return Some(GeneratorKind::XOnly);
    }
    if letters == [Letter::Time] {
        return Some(GeneratorKind::Time);
    }
    if letters.len() == 2 && letters[0].is_w() && letters[1].is_w() {
        return Some(GeneratorKind::WW);
    }
    let (last, prefix) = letters.split_last()?;
    if last.is_w() && prefix.iter().all(|l| l.is_x()) {
        let z = Word::new(prefix.to_vec());
        if alphabet.weight_at_most(&z, Coeff::new(1, 2)) {
            return Some(GeneratorKind::XThenW);
        }
    }
    None
}

pub fn is_generator(word: &Word, alphabet: &Alphabet) -> bool {
    generator_kind(word, alphabet).is_some()
}

/// A commutative shuffle-monomial: a multiset of generator words, kept sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Monomial(Vec<Word>);

impl Monomial {
    pub fn unit() -> Self {
        Monomial(Vec::new())
    }

    pub fn single(w: Word) -> Self {
        Monomial(vec![w])
    }

    pub fn factors(&self) -> &[Word] {
        &self.0
    }

    pub fn degree(&self) -> usize {
        self.0.iter().map(Word::len).sum()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut v = self.0.clone();
        v.extend(other.0.iter().cloned());
        v.sort();
        Monomial(v)
    }

    /// Expands the shuffle product of the factors into words.
    pub fn expand(&self) -> WordPolynomial {
        self.0.iter().fold(WordPolynomial::unit(), |acc, w| {
            acc.shuffle(&WordPolynomial::from_word(w.clone()))
        })
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        let parts: Vec<String> = self.0.iter().map(|w| w.to_string()).collect();
        write!(f, "{}", parts.join("⧢"))
    }
}

/// A polynomial in shuffle-monomials of generators. Printed in
/// graded-lexicographic monomial order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GeneratorPolynomial {
    terms: BTreeMap<Monomial, Coeff>,
}

impl GeneratorPolynomial {
    pub fn zero() -> Self {
        GeneratorPolynomial::default()
    }

    pub fn monomial(m: Monomial) -> Self {
        let mut p = GeneratorPolynomial::zero();
        p.add_term(m, Coeff::one());
        p
    }

    pub fn add_term(&mut self, m: Monomial, c: Coeff) {
        if c.is_zero() {
            return;
        }
        let key = m.clone();
        let e = self.terms.entry(m).or_insert_with(Coeff::zero);
        *e += c;
        if e.is_zero() {
            self.terms.remove(&key);
        }
    }

    pub fn add_scaled(&mut self, other: &GeneratorPolynomial, c: Coeff) {
        for (m, v) in &other.terms {
            self.add_term(m.clone(), *v * c);
        }
    }

    /// Product of two polynomials (shuffle of generators is commutative).
    pub fn mul(&self, other: &GeneratorPolynomial) -> GeneratorPolynomial {
        let mut out = GeneratorPolynomial::zero();
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                out.add_term(a.mul(b), *ca * *cb);
            }
        }
        out
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Monomial, &Coeff)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Expands back into a word polynomial. Inverse of the decomposition.
    pub fn expand(&self) -> WordPolynomial {
        let mut out = WordPolynomial::zero();
        for (m, c) in &self.terms {
            out.add_scaled(&m.expand(), *c);
        }
        out
    }
}

impl fmt::Display for GeneratorPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_signed_terms(f, self.terms.iter().map(|(m, c)| (m.to_string(), *c)))
    }
}

/// Memoised decomposition of words of weight ≤ 1 into shuffle polynomials
/// of generators.
#[derive(Debug, Clone)]
pub struct Decomposer {
    alphabet: Alphabet,
    cache: HashMap<Word, GeneratorPolynomial>,
}

impl Decomposer {
    pub fn new(alphabet: Alphabet) -> Self {
        Decomposer {
            alphabet,
            cache: HashMap::new(),
        }
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn decompose(&mut self, word: &Word) -> Result<GeneratorPolynomial> {
        self.alphabet.check_word(word)?;
        if !self.alphabet.within_unit(word) {
            return Err(Error::WeightTooLarge {
                word: word.to_string(),
                weight: self.alphabet.weight(word),
            });
        }
        self.decompose_inner(word)
    }

    fn decompose_inner(&mut self, word: &Word) -> Result<GeneratorPolynomial> {
        if let Some(p) = self.cache.get(word) {
            return Ok(p.clone());
        }
        let result = if word.is_empty() {
            GeneratorPolynomial::monomial(Monomial::unit())
        } else if is_generator(word, &self.alphabet) {
            GeneratorPolynomial::monomial(Monomial::single(word.clone()))
        } else {
            self.split_on_w(word)?
        };
        self.cache.insert(word.clone(), result.clone());
        Ok(result)
    }

    // Non-generators of weight ≤ 1 are exactly u α j₁…jₙ with u, j X-words,
    // one W-letter α and n ≥ 1. Then
    //   u α j₁…jₙ = (uα) ⧢ (j₁…jₙ) − Σₖ (u ⧢ j₁…jₖ) α jₖ₊₁…jₙ
    // and every word on the right has the W-letter strictly further right.
    fn split_on_w(&mut self, word: &Word) -> Result<GeneratorPolynomial> {
        let letters = word.letters();
        let w_positions: Vec<usize> = (0..letters.len()).filter(|&i| letters[i].is_w()).collect();
        if w_positions.len() != 1 || letters.contains(&Letter::Time) {
            return Err(Error::NotAGenerator(word.to_string()));
        }
        let p = w_positions[0];
        let u = word.slice(0, p);
        let alpha = word.slice(p, p + 1);
        let v = word.slice(p + 1, word.len());
        let n = v.len();
        debug_assert!(n >= 1);

        let left = self.decompose_inner(&u.concat(&alpha))?;
        let right = self.decompose_inner(&v)?;
        let mut out = left.mul(&right);
        for k in 1..=n {
            let head = v.slice(0, k);
            let tail = v.slice(k, n);
            let suffix = alpha.concat(&tail);
            for (sw, c) in shuffle(&u, &head).iter() {
                let term = sw.concat(&suffix);
                let sub = self.decompose_inner(&term)?;
                out.add_scaled(&sub, -*c);
            }
        }
        Ok(out)
    }
}

/// One-shot decomposition; see [`Decomposer`] for repeated use.
pub fn decompose_to_generators(word: &Word, alphabet: &Alphabet) -> Result<GeneratorPolynomial> {
    Decomposer::new(*alphabet).decompose(word)
}

#[cfg(test)]
mod tests {
    use super::super::word::w;
    use super::*;

    fn alpha3() -> Alphabet {
        Alphabet::new(3, 2, 0.1).unwrap()
    }

    #[test]
    fn generators_classified() {
        let a = alpha3();
        assert_eq!(generator_kind(&w("00000"), &a), Some(GeneratorKind::XOnly));
        assert_eq!(
            generator_kind(&w("0000000000"), &a),
            Some(GeneratorKind::XOnly)
        );
        assert_eq!(generator_kind(&w("012a"), &a), Some(GeneratorKind::XThenW));
        assert_eq!(generator_kind(&w("ab"), &a), Some(GeneratorKind::WW));
        assert_eq!(generator_kind(&w("t"), &a), Some(GeneratorKind::Time));
        assert_eq!(generator_kind(&w("a0"), &a), None);
        assert_eq!(generator_kind(&w("000000a"), &a), None);
    }

    #[test]
    fn single_trailing_letter() {
        let a = alpha3();
        let p = decompose_to_generators(&w("a0"), &a).unwrap();
        // α i = i ⧢ α − i α
        let mut expected = GeneratorPolynomial::zero();
        expected.add_term(Monomial::single(w("0a")), -Coeff::one());
        expected.add_term(
            Monomial::single(w("0")).mul(&Monomial::single(w("a"))),
            Coeff::one(),
        );
        assert_eq!(p, expected);
    }

    #[test]
    fn two_trailing_letters_known_form() {
        let a = alpha3();
        let p = decompose_to_generators(&w("0a12"), &a).unwrap();
        let mono = |parts: &[&str]| {
            parts
                .iter()
                .fold(Monomial::unit(), |m, s| m.mul(&Monomial::single(w(s))))
        };
        let mut expected = GeneratorPolynomial::zero();
        let one = Coeff::one();
        expected.add_term(mono(&["0a", "12"]), one);
        expected.add_term(mono(&["01a", "2"]), -one);
        expected.add_term(mono(&["021a"]), one);
        expected.add_term(mono(&["201a"]), one);
        expected.add_term(mono(&["10a", "2"]), -one);
        expected.add_term(mono(&["210a"]), one);
        assert_eq!(p, expected);
        assert_eq!(p.expand(), WordPolynomial::from_word(w("0a12")));
    }

    #[test]
    fn overweight_rejected() {
        let a = Alphabet::scalar(0.3).unwrap();
        assert!(matches!(
            decompose_to_generators(&w("00a"), &a),
            Err(Error::WeightTooLarge { .. })
        ));
        assert!(decompose_to_generators(&w("2"), &a).is_err());
    }

    #[test]
    fn every_unit_weight_word_round_trips() {
        for h in [0.1, 0.15, 0.25, 0.3] {
            let a = Alphabet::new(2, 2, h).unwrap();
            let mut d = Decomposer::new(a);
            for word in a.words_up_to_unit_weight() {
                let p = d.decompose(&word).unwrap();
                for (m, _) in p.iter() {
                    for f in m.factors() {
                        assert!(is_generator(f, &a), "{f} in decomposition of {word}");
                    }
                }
                assert_eq!(
                    p.expand(),
                    WordPolynomial::from_word(word.clone()),
                    "{word}"
                );
            }
        }
    }

    #[test]
    fn empty_word_is_unit() {
        let p = decompose_to_generators(&Word::empty(), &alpha3()).unwrap();
        assert_eq!(p.to_string(), "1");
    }
}
