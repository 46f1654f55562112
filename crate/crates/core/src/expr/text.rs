//! Parser for the textual expression format.
//!
//! The format is what `Display` produces: `phi1(a1 a2)`, `phi2(a1, a2)`,
//! unknowns `alpha<k>` with optional `^e`, rationals `p/q`, joined by `*`,
//! `+`, `-` and parentheses. Columns in errors are 1-based.

use num_bigint::BigInt;

use super::coeff::{CoeffPoly, PowerProduct, Rational, Unknown};
use super::poly::PolyExpr;
use super::symbol::MomentSymbol;
use super::word::{Letter, SymmetryFlags, Word};
use crate::error::{Error, Result};

pub(crate) struct Cursor<'a> {
    chars: Vec<char>,
    pos: usize,
    _src: &'a str,
}

impl<'a> Cursor<'a> {
    pub(crate) fn new(src: &'a str) -> Self {
        Cursor {
            chars: src.chars().collect(),
            pos: 0,
            _src: src,
        }
    }

    pub(crate) fn error<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Parse {
            column: self.pos + 1,
            message: message.into(),
        })
    }

    pub(crate) fn skip_ws(&mut self) {
        while self.peek().is_some_and(|c| c.is_whitespace()) {
            self.pos += 1;
        }
    }

    pub(crate) fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    pub(crate) fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.pos >= self.chars.len()
    }

    pub(crate) fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub(crate) fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            match self.peek() {
                Some(found) => self.error(format!("expected '{c}', found '{found}'")),
                None => self.error(format!("expected '{c}', found end of input")),
            }
        }
    }

    fn starts_with(&self, s: &str) -> bool {
        s.chars()
            .enumerate()
            .all(|(i, c)| self.chars.get(self.pos + i) == Some(&c))
    }

    pub(crate) fn keyword(&mut self, s: &str) -> bool {
        self.skip_ws();
        if self.starts_with(s) {
            self.pos += s.chars().count();
            true
        } else {
            false
        }
    }

    fn digits(&mut self) -> Option<String> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        (self.pos > start).then(|| self.chars[start..self.pos].iter().collect())
    }

    fn letter(&mut self) -> Result<Letter> {
        self.skip_ws();
        let algebra = match self.peek() {
            Some(c) if c.is_ascii_lowercase() => c,
            Some(c) => return self.error(format!("expected a letter like 'a1', found '{c}'")),
            None => return self.error("expected a letter like 'a1', found end of input"),
        };
        self.pos += 1;
        let Some(digits) = self.digits() else {
            return self.error("expected a decimal index after the algebra label");
        };
        match digits.parse::<u32>() {
            Ok(i) if i >= 1 => Ok(Letter::new(algebra, i)),
            _ => {
                self.pos -= digits.len();
                self.error("letter index must be a positive integer")
            }
        }
    }

    /// A whitespace-separated word, or `1` for the unit, ending before `,` or `)`.
    pub(crate) fn word(&mut self) -> Result<Word> {
        self.skip_ws();
        if self.peek() == Some('1') {
            self.pos += 1;
            return Ok(Word::unit());
        }
        let mut letters = vec![self.letter()?];
        loop {
            self.skip_ws();
            match self.peek() {
                Some(',') | Some(')') | None => break,
                _ => letters.push(self.letter()?),
            }
        }
        Ok(Word::new(letters))
    }

    /// `phi1(w)` or `phi2(w, w)` as a raw (uncanonicalized) symbol.
    pub(crate) fn raw_symbol(&mut self) -> Result<MomentSymbol> {
        self.skip_ws();
        if self.keyword("phi1") {
            self.expect('(')?;
            let w = self.word()?;
            self.expect(')')?;
            Ok(MomentSymbol::Phi1(w))
        } else if self.keyword("phi2") {
            self.expect('(')?;
            let u = self.word()?;
            self.expect(',')?;
            let v = self.word()?;
            self.expect(')')?;
            Ok(MomentSymbol::Phi2(u, v))
        } else {
            self.error("expected 'phi1(' or 'phi2('")
        }
    }

    fn number(&mut self) -> Result<Rational> {
        let Some(n) = self.digits() else {
            return self.error("expected a number");
        };
        let n: BigInt = n.parse().expect("digits");
        if self.peek() == Some('/') {
            self.pos += 1;
            let Some(d) = self.digits() else {
                return self.error("expected a denominator");
            };
            let d: BigInt = d.parse().expect("digits");
            if d == BigInt::from(0) {
                return self.error("zero denominator");
            }
            return Ok(Rational::new(n, d));
        }
        Ok(Rational::from_integer(n))
    }

    fn factor(&mut self, flags: SymmetryFlags) -> Result<PolyExpr> {
        self.skip_ws();
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let e = self.expr(flags)?;
                self.expect(')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() => Ok(PolyExpr::scalar(CoeffPoly::constant(self.number()?))),
            Some('a') if self.starts_with("alpha") => {
                self.pos += 5;
                let Some(k) = self.digits() else {
                    return self.error("expected unknown index after 'alpha'");
                };
                let u = Unknown(k.parse().map_err(|_| Error::Parse {
                    column: self.pos,
                    message: "unknown index out of range".into(),
                })?);
                let mut e = 1;
                if self.peek() == Some('^') {
                    self.pos += 1;
                    let Some(d) = self.digits() else {
                        return self.error("expected exponent");
                    };
                    e = d.parse().unwrap_or(1);
                }
                let p = CoeffPoly::from_terms([(PowerProduct::from_pairs(vec![(u, e)]), Rational::from_integer(1.into()))]);
                Ok(PolyExpr::scalar(p))
            }
            Some('p') => {
                let s = self.raw_symbol()?;
                Ok(PolyExpr::from_reduced(crate::expr::canonicalize_symbol(&s, flags)))
            }
            Some(c) => self.error(format!("unexpected '{c}'")),
            None => self.error("unexpected end of input"),
        }
    }

    fn term(&mut self, flags: SymmetryFlags) -> Result<PolyExpr> {
        let mut acc = self.factor(flags)?;
        while self.eat('*') {
            acc = acc.mul(&self.factor(flags)?);
        }
        Ok(acc)
    }

    fn expr(&mut self, flags: SymmetryFlags) -> Result<PolyExpr> {
        let mut acc = if self.eat('-') {
            self.term(flags)?.negate()
        } else {
            self.term(flags)?
        };
        loop {
            if self.eat('+') {
                acc = acc.add(&self.term(flags)?);
            } else if self.eat('-') {
                acc = acc.sub(&self.term(flags)?);
            } else {
                return Ok(acc);
            }
        }
    }
}

/// Parse an expression in the textual format, canonicalizing under `flags`.
pub fn parse_expr(src: &str, flags: SymmetryFlags) -> Result<PolyExpr> {
    let mut c = Cursor::new(src);
    let e = c.expr(flags)?;
    if !c.at_end() {
        return c.error("trailing input");
    }
    Ok(e)
}

/// Parse a coefficient polynomial such as `alpha2 + alpha3 - 1`.
pub fn parse_coeff(src: &str) -> Result<CoeffPoly> {
    let e = parse_expr(src, SymmetryFlags::default())?;
    let mut out = CoeffPoly::zero();
    for (m, c) in e.terms() {
        if !m.is_one() {
            return Err(Error::Parse {
                column: 1,
                message: "moment symbols are not allowed in a coefficient".into(),
            });
        }
        out = &out + c;
    }
    Ok(out)
}

/// Parse a whitespace-separated word such as `a1 b1`.
pub fn parse_word(src: &str) -> Result<Word> {
    let mut c = Cursor::new(src);
    let w = c.word()?;
    if !c.at_end() {
        return c.error("trailing input");
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_rendered_expression() {
        let flags = SymmetryFlags::default();
        let src = "alpha6*phi1(a1 a2)*phi1(b1 b2) - 1/2*phi2(a2, a1) + (alpha2 + 1)*phi1(b1)";
        let e = parse_expr(src, flags).unwrap();
        let back = parse_expr(&e.to_string(), flags).unwrap();
        assert_eq!(e, back);
        assert!(e.to_string().contains("phi2(a1, a2)"));
    }

    #[test]
    fn error_columns() {
        let err = parse_expr("phi2(a1, b1", SymmetryFlags::default()).unwrap_err();
        assert_eq!(
            err,
            Error::Parse {
                column: 12,
                message: "expected ')', found end of input".into()
            }
        );
        let err = parse_word("a1 B2").unwrap_err();
        assert!(matches!(err, Error::Parse { column: 4, .. }));
        let err = parse_word("a0").unwrap_err();
        assert!(matches!(err, Error::Parse { column: 2, .. }));
    }
}
