//! The algebra of free (noncommutative) polynomials in `d` letters and its
//! evaluation on matrix tuples.

mod parse;
mod poly;
mod word;

pub use parse::parse_poly;
pub use poly::{FreePolynomial, ZERO_COEFF};
pub use word::{count_words_up_to, word_values, words_up_to, Caps, Word};
