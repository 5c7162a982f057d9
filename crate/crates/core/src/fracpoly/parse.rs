//! Recursive-descent parser for the polynomial expression grammar:
//!
//! ```text
//! expr     := term (('+'|'-') term)*
//! term     := factor ('*' factor)*
//! factor   := coeff | var ('^' exponent)?
//! var      := 'x' | 'y'
//! coeff    := integer | integer '/' integer
//! exponent := integer | integer '/' integer
//! ```
//!
//! Whitespace is insignificant and a unary minus may precede a term.
//! Exponents are unsigned, so negative exponents are rejected at the syntax
//! level with a position-carrying error.

use super::FracPoly;
use crate::rational::Rat;
use num_bigint::BigInt;
use num_traits::{One, Zero};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("syntax error at position {pos}: {msg}")]
pub struct ParseError {
    pub pos: usize,
    pub msg: String,
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str) -> Self {
        Cursor {
            bytes: text.as_bytes(),
            pos: 0,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let c = self.peek()?;
        self.pos += 1;
        Some(c)
    }

    fn error(&self, msg: impl Into<String>) -> ParseError {
        ParseError {
            pos: self.pos,
            msg: msg.into(),
        }
    }

    fn integer(&mut self) -> Result<BigInt, ParseError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos == start {
            if self.bytes.get(self.pos) == Some(&b'-') {
                return Err(self.error("negative exponent or coefficient digit expected"));
            }
            return Err(self.error("expected integer"));
        }
        let s = std::str::from_utf8(&self.bytes[start..self.pos]).unwrap();
        Ok(s.parse().unwrap())
    }

    /// integer or integer '/' integer
    fn rational(&mut self) -> Result<Rat, ParseError> {
        let num = self.integer()?;
        if self.peek() == Some(b'/') {
            self.bump();
            let den_pos = self.pos;
            let den = self.integer()?;
            if den.is_zero() {
                return Err(ParseError {
                    pos: den_pos,
                    msg: "zero denominator".into(),
                });
            }
            Ok(Rat::new(num, den))
        } else {
            Ok(Rat::from_integer(num))
        }
    }

    fn factor(&mut self) -> Result<FracPoly, ParseError> {
        match self.peek() {
            Some(b'x') | Some(b'y') => {
                let var = self.bump().unwrap();
                let exponent = if self.peek() == Some(b'^') {
                    self.bump();
                    if self.peek() == Some(b'-') {
                        return Err(self.error("negative exponents are not allowed"));
                    }
                    self.rational()?
                } else {
                    Rat::one()
                };
                Ok(if var == b'x' {
                    FracPoly::monomial(Rat::one(), exponent, Rat::zero())
                } else {
                    FracPoly::monomial(Rat::one(), Rat::zero(), exponent)
                })
            }
            Some(c) if c.is_ascii_digit() => Ok(FracPoly::constant(self.rational()?)),
            Some(c) => Err(self.error(format!("unexpected character '{}'", c as char))),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn term(&mut self) -> Result<FracPoly, ParseError> {
        let mut acc = self.factor()?;
        while self.peek() == Some(b'*') {
            self.bump();
            acc = acc.mul(&self.factor()?);
        }
        Ok(acc)
    }

    fn expr(&mut self) -> Result<FracPoly, ParseError> {
        let mut acc = FracPoly::zero();
        let mut sign = Rat::one();
        if self.peek() == Some(b'-') {
            self.bump();
            sign = -Rat::one();
        } else if self.peek() == Some(b'+') {
            self.bump();
        }
        loop {
            let t = self.term()?;
            acc = acc.add(&t.scale(&sign));
            match self.peek() {
                Some(b'+') => {
                    self.bump();
                    sign = Rat::one();
                }
                Some(b'-') => {
                    self.bump();
                    sign = -Rat::one();
                }
                Some(c) => return Err(self.error(format!("unexpected character '{}'", c as char))),
                None => return Ok(acc),
            }
        }
    }
}

pub fn parse_poly(text: &str) -> Result<FracPoly, ParseError> {
    let mut cur = Cursor::new(text);
    cur.expr()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat, rat_int};

    #[test]
    fn figure_polynomial_support() {
        let p = parse_poly("x^5*y - x^3*y^2 + x^2*y^4").unwrap();
        let support = p.support();
        assert_eq!(support.len(), 3);
        for (ex, ey) in [(5, 1), (3, 2), (2, 4)] {
            assert!(!p.coeff_at(&rat_int(ex), &rat_int(ey)).is_zero());
        }
    }

    #[test]
    fn zero_and_cancellation() {
        assert!(parse_poly("0").unwrap().is_zero());
        let p = parse_poly("1/2*x - x").unwrap();
        assert_eq!(p.num_terms(), 1);
        assert_eq!(p.coeff_at(&rat_int(1), &rat_int(0)), rat(-1, 2));
    }

    #[test]
    fn fractional_exponents_and_coeffs() {
        let p = parse_poly("3/4*x^3/2*y").unwrap();
        assert_eq!(p.coeff_at(&rat(3, 2), &rat_int(1)), rat(3, 4));
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse_poly("x^-2").unwrap_err();
        assert_eq!(e.pos, 2);
        assert!(e.msg.contains("negative"));

        assert!(parse_poly("x +").is_err());
        assert!(parse_poly("x ^ 1/0").is_err());
        assert!(parse_poly("z").is_err());
        assert!(parse_poly("x y").is_err()); // implicit products are not in the grammar
        assert!(parse_poly("").is_err());
    }

    #[test]
    fn unary_minus_and_signs() {
        let p = parse_poly("-x + 2*y").unwrap();
        assert_eq!(p.coeff_at(&rat_int(1), &rat_int(0)), rat_int(-1));
        assert_eq!(p.coeff_at(&rat_int(0), &rat_int(1)), rat_int(2));
    }
}
