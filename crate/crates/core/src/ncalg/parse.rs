//! Recursive-descent parser for the polynomial text grammar:
//!
//! ```text
//! poly   := term (('+'|'-') term)*
//! term   := coeff ('*' factor)* | factor ('*' factor)*
//! factor := var ('^' uint)?
//! var    := 'x' uint                      (1-based)
//! coeff  := a | a 'i' | '(' a '+' b 'i' ')' | '(' a '-' b 'i' ')'
//! ```
//!
//! `a`, `b` are unsigned decimal floats (an optional exponent is accepted).
//! Inside parentheses `a` may carry a sign, and a leading sign on the first
//! term is accepted, so every canonical print parses back. Whitespace is
//! insignificant.

use num_complex::Complex64;

use super::poly::FreePolynomial;
use super::word::Word;
use crate::error::{Error, Result};

/// Parses `text` into a canonical polynomial over `d` letters.
pub fn parse_poly(text: &str, d: usize) -> Result<FreePolynomial> {
    if d == 0 {
        return Err(Error::InvalidArgument("alphabet size must be >= 1".into()));
    }
    let mut p = Parser { src: text.as_bytes(), pos: 0, d };
    let poly = p.poly()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(poly)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    d: usize,
}

impl Parser<'_> {
    fn error(&self, msg: &str) -> Error {
        Error::Syntax { pos: self.pos, msg: msg.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(&format!("expected '{}'", c as char)))
        }
    }

    fn poly(&mut self) -> Result<FreePolynomial> {
        let mut terms = Vec::new();
        let mut sign = 1.0;
        if self.eat(b'-') {
            sign = -1.0;
        } else {
            self.eat(b'+');
        }
        loop {
            let (w, c) = self.term()?;
            terms.push((w, c * sign));
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    sign = 1.0;
                }
                Some(b'-') => {
                    self.pos += 1;
                    sign = -1.0;
                }
                _ => break,
            }
        }
        FreePolynomial::from_terms(self.d, terms)
    }

    fn term(&mut self) -> Result<(Word, Complex64)> {
        let mut letters = Vec::new();
        let coeff = match self.peek() {
            Some(b'x') => {
                self.factor(&mut letters)?;
                Complex64::new(1.0, 0.0)
            }
            Some(b'(') => self.paren_coeff()?,
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                let a = self.number()?;
                if self.src.get(self.pos) == Some(&b'i') {
                    self.pos += 1;
                    Complex64::new(0.0, a)
                } else {
                    Complex64::new(a, 0.0)
                }
            }
            _ => return Err(self.error("expected a coefficient or variable")),
        };
        while self.eat(b'*') {
            self.factor(&mut letters)?;
        }
        Ok((Word::new(letters, self.d)?, coeff))
    }

    fn factor(&mut self, letters: &mut Vec<u32>) -> Result<()> {
        self.expect(b'x')?;
        let start = self.pos;
        let index = self.uint()?;
        if index == 0 || index as usize > self.d {
            self.pos = start;
            return Err(Error::VariableOutOfRange { index: index as usize, d: self.d });
        }
        let power = if self.eat(b'^') {
            self.skip_ws();
            self.uint()?
        } else {
            1
        };
        letters.extend(std::iter::repeat_n(index as u32, power as usize));
        Ok(())
    }

    fn paren_coeff(&mut self) -> Result<Complex64> {
        self.expect(b'(')?;
        let re_sign = if self.eat(b'-') {
            -1.0
        } else {
            self.eat(b'+');
            1.0
        };
        self.skip_ws();
        let re = re_sign * self.number()?;
        let im_sign = match self.peek() {
            Some(b'+') => 1.0,
            Some(b'-') => -1.0,
            _ => return Err(self.error("expected '+' or '-' in complex literal")),
        };
        self.pos += 1;
        self.skip_ws();
        let im = im_sign * self.number()?;
        if self.src.get(self.pos) != Some(&b'i') {
            return Err(self.error("expected 'i' after imaginary part"));
        }
        self.pos += 1;
        self.expect(b')')?;
        Ok(Complex64::new(re, im))
    }

    fn uint(&mut self) -> Result<u64> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected an unsigned integer"));
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .expect("ascii digits")
            .parse()
            .map_err(|_| Error::Syntax { pos: start, msg: "integer too large".into() })
    }

    fn number(&mut self) -> Result<f64> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
            p.pos - s
        };
        let int_digits = digits(self);
        let mut frac_digits = 0;
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            frac_digits = digits(self);
        }
        if int_digits + frac_digits == 0 {
            self.pos = start;
            return Err(self.error("expected a number"));
        }
        if matches!(self.src.get(self.pos), Some(b'e') | Some(b'E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+') | Some(b'-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                self.pos = mark;
                return Err(self.error("malformed exponent"));
            }
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .expect("ascii number")
            .parse()
            .map_err(|_| Error::Syntax { pos: start, msg: "invalid number".into() })
    }
}
