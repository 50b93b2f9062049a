use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_traits::{One, Signed, Zero};

use super::word::{Coeff, Word};

/// A finite linear combination of words with rational coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct WordPolynomial {
    terms: BTreeMap<Word, Coeff>,
}

impl WordPolynomial {
    pub fn zero() -> Self {
        WordPolynomial::default()
    }

    pub fn unit() -> Self {
        WordPolynomial::from_word(Word::empty())
    }

    pub fn from_word(w: Word) -> Self {
        let mut p = WordPolynomial::zero();
        p.add_term(w, Coeff::one());
        p
    }

    pub fn add_term(&mut self, w: Word, c: Coeff) {
        if c.is_zero() {
            return;
        }
        let key = w.clone();
        let entry = self.terms.entry(w).or_insert_with(Coeff::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&key);
        }
    }

    pub fn add_scaled(&mut self, other: &WordPolynomial, c: Coeff) {
        for (w, v) in &other.terms {
            self.add_term(w.clone(), *v * c);
        }
    }

    pub fn scale(&self, c: Coeff) -> Self {
        let mut out = WordPolynomial::zero();
        out.add_scaled(self, c);
        out
    }

    pub fn coeff(&self, w: &Word) -> Coeff {
        self.terms.get(w).copied().unwrap_or_else(Coeff::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Word, &Coeff)> {
        self.terms.iter()
    }

    /// Right-multiplies every word by `suffix` (concatenation).
    pub fn concat_right(&self, suffix: &Word) -> Self {
        let mut out = WordPolynomial::zero();
        for (w, c) in &self.terms {
            out.add_term(w.concat(suffix), *c);
        }
        out
    }

    /// Bilinear extension of the shuffle product.
    pub fn shuffle(&self, other: &WordPolynomial) -> Self {
        let mut out = WordPolynomial::zero();
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                out.add_scaled(&shuffle(a, b), *ca * *cb);
            }
        }
        out
    }
}

impl Add for &WordPolynomial {
    type Output = WordPolynomial;
    fn add(self, rhs: &WordPolynomial) -> WordPolynomial {
        let mut out = self.clone();
        out.add_scaled(rhs, Coeff::one());
        out
    }
}

impl Sub for &WordPolynomial {
    type Output = WordPolynomial;
    fn sub(self, rhs: &WordPolynomial) -> WordPolynomial {
        let mut out = self.clone();
        out.add_scaled(rhs, -Coeff::one());
        out
    }
}

impl Neg for &WordPolynomial {
    type Output = WordPolynomial;
    fn neg(self) -> WordPolynomial {
        self.scale(-Coeff::one())
    }
}

impl fmt::Display for WordPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_signed_terms(f, self.terms.iter().map(|(w, c)| (w.to_string(), *c)))
    }
}

pub(crate) fn write_signed_terms(
    f: &mut fmt::Formatter<'_>,
    terms: impl Iterator<Item = (String, Coeff)>,
) -> fmt::Result {
    let mut first = true;
    for (body, c) in terms {
        let sign = if c.is_negative() { "-" } else { "+" };
        let mag = c.abs();
        if first {
            if c.is_negative() {
                write!(f, "-")?;
            }
        } else {
            write!(f, " {sign} ")?;
        }
        if mag != Coeff::one() {
            write!(f, "{mag}·")?;
        }
        write!(f, "{body}")?;
        first = false;
    }
    if first {
        write!(f, "0")?;
    }
    Ok(())
}

/// Shuffle product of two words, with integer multiplicities.
///
/// Uses the prefix recursion `ua ⧢ vb = (u ⧢ vb)a + (ua ⧢ v)b` tabulated
/// over prefix lengths.
pub fn shuffle(a: &Word, b: &Word) -> WordPolynomial {
    let (la, lb) = (a.letters(), b.letters());
    let (n, m) = (la.len(), lb.len());
    // table[i][j] = a[..i] ⧢ b[..j]
    let mut prev_row: Vec<WordPolynomial> = Vec::with_capacity(m + 1);
    for j in 0..=m {
        prev_row.push(WordPolynomial::from_word(Word::new(lb[..j].to_vec())));
    }
    for i in 1..=n {
        let mut row: Vec<WordPolynomial> = Vec::with_capacity(m + 1);
        row.push(WordPolynomial::from_word(Word::new(la[..i].to_vec())));
        let ai = Word::new(vec![la[i - 1]]);
        for j in 1..=m {
            let bj = Word::new(vec![lb[j - 1]]);
            let mut cell = prev_row[j].concat_right(&ai);
            cell.add_scaled(&row[j - 1].concat_right(&bj), Coeff::one());
            row.push(cell);
        }
        prev_row = row;
    }
    prev_row.pop().unwrap_or_else(WordPolynomial::unit)
}

/// Deconcatenation coproduct: all splittings `w = u · v`, including the
/// empty prefix and suffix.
pub fn deconcatenate(w: &Word) -> Vec<(Word, Word)> {
    (0..=w.len())
        .map(|k| (w.slice(0, k), w.slice(k, w.len())))
        .collect()
}

/// Element of the tensor square, used to state the bialgebra identities.
pub type TensorPolynomial = BTreeMap<(Word, Word), Coeff>;

fn tensor_add(t: &mut TensorPolynomial, key: (Word, Word), c: Coeff) {
    if c.is_zero() {
        return;
    }
    let e = t.entry(key.clone()).or_insert_with(Coeff::zero);
    *e += c;
    if e.is_zero() {
        t.remove(&key);
    }
}

/// Linear extension of [`deconcatenate`].
pub fn coproduct(p: &WordPolynomial) -> TensorPolynomial {
    let mut out = TensorPolynomial::new();
    for (w, c) in p.iter() {
        for (u, v) in deconcatenate(w) {
            tensor_add(&mut out, (u, v), *c);
        }
    }
    out
}

/// Componentwise shuffle on the tensor square.
pub fn tensor_shuffle(a: &TensorPolynomial, b: &TensorPolynomial) -> TensorPolynomial {
    let mut out = TensorPolynomial::new();
    for ((a1, a2), ca) in a {
        for ((b1, b2), cb) in b {
            let left = shuffle(a1, b1);
            let right = shuffle(a2, b2);
            for (l, cl) in left.iter() {
                for (r, cr) in right.iter() {
                    tensor_add(&mut out, (l.clone(), r.clone()), *ca * *cb * *cl * *cr);
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::word::w;
    use super::*;

    #[test]
    fn shuffle_small() {
        let p = shuffle(&w("0"), &w("a"));
        assert_eq!(p.to_string(), "0a + a0");
        let q = shuffle(&w("0"), &w("0"));
        assert_eq!(q.to_string(), "2·00");
        let r = shuffle(&w("0a"), &w("1"));
        assert_eq!(r.to_string(), "01a + 0a1 + 10a");
        assert_eq!(
            shuffle(&Word::empty(), &w("ab")),
            WordPolynomial::from_word(w("ab"))
        );
    }

    #[test]
    fn shuffle_multiplicity_total() {
        // |u ⧢ v| counts binomial(|u|+|v|, |u|) interleavings
        let p = shuffle(&w("012"), &w("ab"));
        let total: Coeff = p.iter().map(|(_, c)| *c).sum();
        assert_eq!(total, Coeff::from_integer(10));
    }

    #[test]
    fn deconcatenation_terms() {
        let d = deconcatenate(&w("0a"));
        assert_eq!(d.len(), 3);
        assert_eq!(d[0], (Word::empty(), w("0a")));
        assert_eq!(d[1], (w("0"), w("a")));
        assert_eq!(d[2], (w("0a"), Word::empty()));
    }

    #[test]
    fn coproduct_is_shuffle_morphism() {
        let a = WordPolynomial::from_word(w("0a"));
        let b = WordPolynomial::from_word(w("1b"));
        let lhs = coproduct(&a.shuffle(&b));
        let rhs = tensor_shuffle(&coproduct(&a), &coproduct(&b));
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn cancellation_removes_terms() {
        let a = WordPolynomial::from_word(w("0"));
        assert!((&a - &a).is_zero());
        assert_eq!((&a - &a).to_string(), "0");
    }
}
