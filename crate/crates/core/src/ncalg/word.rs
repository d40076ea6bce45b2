use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::mattuple::MatrixTuple;

/// Size guardrails for word enumeration and symbolic products.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Caps {
    pub max_degree: usize,
    pub max_words: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps { max_degree: 8, max_words: 200_000 }
    }
}

/// A word in the letters `x1, ..., xd`, stored with 1-based letter indices.
/// The empty word is the unit.
///
/// Words are ordered by length first, then lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Word(Vec<u32>);

impl Word {
    pub fn unit() -> Self {
        Word(Vec::new())
    }

    /// Builds a word from 1-based letters, each of which must lie in `[1, d]`.
    pub fn new(letters: Vec<u32>, d: usize) -> Result<Self> {
        if let Some(&bad) = letters.iter().find(|&&l| l == 0 || l as usize > d) {
            return Err(Error::VariableOutOfRange { index: bad as usize, d });
        }
        Ok(Word(letters))
    }

    pub fn letter(j: u32) -> Self {
        Word(vec![j])
    }

    pub fn letters(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = Vec::with_capacity(self.len() + other.len());
        v.extend_from_slice(&self.0);
        v.extend_from_slice(&other.0);
        Word(v)
    }

    pub fn max_letter(&self) -> u32 {
        self.0.iter().copied().max().unwrap_or(0)
    }
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.len().cmp(&other.0.len()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Prints `x1^2*x2`, or `1` for the unit word.
/// Serialized through its display form, e.g. `"x1^2*x2"`.
impl serde::Serialize for Word {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        let mut first = true;
        let mut i = 0;
        while i < self.0.len() {
            let l = self.0[i];
            let mut run = 1;
            while i + run < self.0.len() && self.0[i + run] == l {
                run += 1;
            }
            if !first {
                write!(f, "*")?;
            }
            first = false;
            if run == 1 {
                write!(f, "x{l}")?;
            } else {
                write!(f, "x{l}^{run}")?;
            }
            i += run;
        }
        Ok(())
    }
}

/// Number of words of length `<= max_len` over `d` letters.
pub fn count_words_up_to(d: usize, max_len: usize) -> u128 {
    let mut total: u128 = 0;
    let mut layer: u128 = 1;
    for _ in 0..=max_len {
        total = total.saturating_add(layer);
        layer = layer.saturating_mul(d as u128);
    }
    total
}

/// All words of length `<= max_len`, in graded length-then-lexicographic order.
pub fn words_up_to(d: usize, max_len: usize, cap: usize) -> Result<Vec<Word>> {
    if d == 0 {
        return Err(Error::InvalidArgument("alphabet size must be >= 1".into()));
    }
    let count = count_words_up_to(d, max_len);
    if count > cap as u128 {
        return Err(Error::WordCap { count, cap });
    }
    let mut out = Vec::with_capacity(count as usize);
    out.push(Word::unit());
    let mut start = 0;
    for _ in 0..max_len {
        let end = out.len();
        for idx in start..end {
            for l in 1..=d as u32 {
                let mut v = out[idx].0.clone();
                v.push(l);
                out.push(Word(v));
            }
        }
        start = end;
    }
    Ok(out)
}

/// Every word of length `<= max_len` together with its value at `x`, in the
/// order of [`words_up_to`]. The parent of word `k >= 1` is word `(k - 1) / d`
/// and its last letter is `(k - 1) % d + 1`, so each value costs one product.
pub fn word_values(x: &MatrixTuple, max_len: usize, caps: Caps) -> Result<(Vec<Word>, Vec<CMat>)> {
    if max_len > caps.max_degree {
        return Err(Error::DegreeCap { degree: max_len, cap: caps.max_degree });
    }
    let d = x.d();
    let words = words_up_to(d, max_len, caps.max_words)?;
    let n = x.level();
    let mut values: Vec<CMat> = Vec::with_capacity(words.len());
    values.push(CMat::identity(n, n));
    for k in 1..words.len() {
        let v = &values[(k - 1) / d] * x.coord((k - 1) % d);
        values.push(v);
    }
    Ok((words, values))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumeration_counts_and_order() {
        let w = words_up_to(2, 1, 100).unwrap();
        assert_eq!(w, vec![Word::unit(), Word::letter(1), Word::letter(2)]);
        assert_eq!(words_up_to(2, 2, 100).unwrap().len(), 7);
        assert_eq!(words_up_to(1, 5, 100).unwrap().len(), 6);
        assert_eq!(words_up_to(3, 3, 1000).unwrap().len(), 40);
        let w = words_up_to(3, 3, 1000).unwrap();
        assert!(w.windows(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn enumeration_cap() {
        assert!(matches!(words_up_to(2, 20, 200_000), Err(Error::WordCap { .. })));
        assert_eq!(count_words_up_to(2, 20), (1u128 << 21) - 1);
    }

    #[test]
    fn display_compresses_runs() {
        let w = Word::new(vec![1, 1, 2, 1], 2).unwrap();
        assert_eq!(w.to_string(), "x1^2*x2*x1");
        assert_eq!(Word::unit().to_string(), "1");
        assert!(Word::new(vec![3], 2).is_err());
        assert!(Word::new(vec![0], 2).is_err());
    }
}
