use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;

use super::word::Word;
use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::mattuple::MatrixTuple;

/// Coefficients at or below this magnitude are dropped during canonicalization.
pub const ZERO_COEFF: f64 = 1e-300;

/// A free polynomial: a finite linear combination of words with nonzero
/// complex coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct FreePolynomial {
    d: usize,
    terms: BTreeMap<Word, Complex64>,
}

impl FreePolynomial {
    pub fn zero(d: usize) -> Self {
        FreePolynomial { d, terms: BTreeMap::new() }
    }

    pub fn constant(d: usize, c: Complex64) -> Self {
        Self::monomial(d, Word::unit(), c)
    }

    pub fn one(d: usize) -> Self {
        Self::constant(d, Complex64::new(1.0, 0.0))
    }

    /// The coordinate function `x_j` (1-based).
    pub fn var(d: usize, j: u32) -> Result<Self> {
        let w = Word::new(vec![j], d)?;
        Ok(Self::monomial(d, w, Complex64::new(1.0, 0.0)))
    }

    fn monomial(d: usize, w: Word, c: Complex64) -> Self {
        let mut p = Self::zero(d);
        p.add_term(w, c);
        p
    }

    /// Builds a polynomial from `(word, coefficient)` pairs; repeated words are summed.
    pub fn from_terms<I: IntoIterator<Item = (Word, Complex64)>>(d: usize, terms: I) -> Result<Self> {
        let mut p = Self::zero(d);
        for (w, c) in terms {
            if w.max_letter() as usize > d {
                return Err(Error::VariableOutOfRange { index: w.max_letter() as usize, d });
            }
            p.add_term(w, c);
        }
        Ok(p)
    }

    fn add_term(&mut self, w: Word, c: Complex64) {
        match self.terms.entry(w) {
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().norm() <= ZERO_COEFF {
                    e.remove();
                }
            }
            Entry::Vacant(e) => {
                if c.norm() > ZERO_COEFF {
                    e.insert(c);
                }
            }
        }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Terms in graded lexicographic order.
    pub fn terms(&self) -> impl Iterator<Item = (&Word, &Complex64)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, w: &Word) -> Complex64 {
        self.terms.get(w).copied().unwrap_or(Complex64::new(0.0, 0.0))
    }

    /// Maximum word length; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.terms.keys().map(Word::len).max()
    }

    /// Euclidean norm of the coefficient vector.
    pub fn coeff_norm(&self) -> f64 {
        self.terms.values().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    fn require_same_d(&self, other: &Self) -> Result<()> {
        if self.d != other.d {
            return Err(Error::AlphabetMismatch { left: self.d, right: other.d });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.require_same_d(other)?;
        let mut out = self.clone();
        for (w, c) in &other.terms {
            out.add_term(w.clone(), *c);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|(w, v)| (w.clone(), v * c))
            .filter(|(_, v)| v.norm() > ZERO_COEFF)
            .collect();
        FreePolynomial { d: self.d, terms }
    }

    /// Product by word concatenation; not commutative.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.require_same_d(other)?;
        let mut acc: BTreeMap<Word, Complex64> = BTreeMap::new();
        for (u, a) in &self.terms {
            for (v, b) in &other.terms {
                *acc.entry(u.concat(v)).or_insert(Complex64::new(0.0, 0.0)) += a * b;
            }
        }
        acc.retain(|_, c| c.norm() > ZERO_COEFF);
        Ok(FreePolynomial { d: self.d, terms: acc })
    }

    /// Evaluates at a matrix tuple; the unit word maps to `I_n`.
    ///
    /// Words are visited in plain lexicographic order so consecutive words
    /// share prefixes; a stack of prefix products avoids recomputing them.
    pub fn eval(&self, z: &MatrixTuple) -> Result<CMat> {
        if z.d() != self.d {
            return Err(Error::AlphabetMismatch { left: self.d, right: z.d() });
        }
        let n = z.level();
        let mut out = CMat::zeros(n, n);
        let mut words: Vec<(&Word, &Complex64)> = self.terms.iter().collect();
        words.sort_by(|a, b| a.0.letters().cmp(b.0.letters()));

        let mut prefix: Vec<u32> = Vec::new();
        let mut products: Vec<CMat> = vec![CMat::identity(n, n)];
        for (w, c) in words {
            let letters = w.letters();
            let common = prefix.iter().zip(letters).take_while(|(a, b)| a == b).count();
            prefix.truncate(common);
            products.truncate(common + 1);
            for &l in &letters[common..] {
                let next = products.last().expect("stack holds the unit") * z.coord(l as usize - 1);
                products.push(next);
                prefix.push(l);
            }
            out += products.last().expect("stack holds the unit") * *c;
        }
        Ok(out)
    }
}

fn fmt_real(x: f64) -> String {
    format!("{x}")
}

/// Canonical form: terms in graded lexicographic order as `(a+bi)*word`,
/// joined with ` + `; the zero polynomial prints as `0`.
impl fmt::Display for FreePolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (w, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            let sign = if c.im.is_sign_negative() { '-' } else { '+' };
            write!(f, "({}{}{}i)", fmt_real(c.re), sign, fmt_real(c.im.abs()))?;
            if !w.is_empty() {
                write!(f, "*{w}")?;
            }
        }
        Ok(())
    }
}
