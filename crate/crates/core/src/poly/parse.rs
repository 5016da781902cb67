use num_bigint::BigInt;
use num_traits::One;

use super::ExactPoly;
use crate::error::{Error, Result};
use crate::rational::Rational;

/// Recursive-descent parser for `+ - * / ^ ( )`, rational literals and
/// variables `v1 .. vn`.
pub(super) fn parse_poly(nvars: usize, s: &str) -> Result<ExactPoly> {
    let mut p = Parser {
        src: s.as_bytes(),
        pos: 0,
        nvars,
    };
    let out = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.err("trailing input"));
    }
    Ok(out)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    nvars: usize,
}

impl Parser<'_> {
    fn err(&self, what: &str) -> Error {
        Error::Parse(format!(
            "{what} at byte {} of {:?}",
            self.pos,
            String::from_utf8_lossy(self.src)
        ))
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

    fn digits(&mut self) -> Result<BigInt> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected digits"));
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .unwrap()
            .parse()
            .map_err(|_| self.err("bad integer"))
    }

    fn small(&mut self) -> Result<u32> {
        let d = self.digits()?;
        u32::try_from(d).map_err(|_| self.err("exponent too large"))
    }

    fn expr(&mut self) -> Result<ExactPoly> {
        let mut acc = ExactPoly::zero(self.nvars);
        let mut sign = if self.eat(b'-') {
            -1
        } else {
            self.eat(b'+');
            1
        };
        loop {
            let t = self.term()?;
            acc = if sign < 0 { &acc - &t } else { &acc + &t };
            sign = match self.peek() {
                Some(b'+') => 1,
                Some(b'-') => -1,
                _ => return Ok(acc),
            };
            self.pos += 1;
        }
    }

    fn term(&mut self) -> Result<ExactPoly> {
        let mut acc = self.factor()?;
        while self.eat(b'*') {
            acc = &acc * &self.factor()?;
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<ExactPoly> {
        let base = match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.err("expected ')'"));
                }
                e
            }
            Some(b'v') => {
                self.pos += 1;
                let i = self.small()? as usize;
                if i == 0 || i > self.nvars {
                    return Err(self.err("variable index out of range"));
                }
                ExactPoly::var(self.nvars, i - 1)
            }
            Some(c) if c.is_ascii_digit() => {
                let num = self.digits()?;
                let den = if self.eat(b'/') {
                    self.digits()?
                } else {
                    BigInt::one()
                };
                if den == BigInt::from(0) {
                    return Err(self.err("zero denominator"));
                }
                ExactPoly::constant(self.nvars, Rational::new(num, den))
            }
            Some(b'-') => {
                self.pos += 1;
                return Ok(-&self.factor()?);
            }
            _ => return Err(self.err("expected a factor")),
        };
        if self.eat(b'^') {
            let e = self.small()?;
            return Ok(base.pow(e));
        }
        Ok(base)
    }
}
