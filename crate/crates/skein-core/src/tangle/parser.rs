//! Recursive-descent parser for the tangle expression language.
//!
//! Precedence, loosest first: `+`/`-` sums, `;` composition (bottom to top),
//! `@` tensor, scalar prefixes, atoms. Signature checking happens at
//! elaboration, not here.

use num_bigint::BigInt;

use crate::chebyshev::IntPoly;
use crate::scalar::Rat;
use crate::tangle::expr::{PolySpec, ScalarExpr, SkeinExpr};
use crate::tangle::TangleError;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Semi,
    At,
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    Bang,
    Eof,
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn err(line: usize, col: usize, msg: impl Into<String>) -> TangleError {
    TangleError::Syntax { line, col, msg: msg.into() }
}

fn lex(src: &str) -> Result<Vec<Spanned>, TangleError> {
    let mut out = Vec::new();
    let mut line = 1usize;
    let mut col = 1usize;
    let mut chars = src.chars().peekable();
    while let Some(&c) = chars.peek() {
        let (tline, tcol) = (line, col);
        let mut bump = |chars: &mut std::iter::Peekable<std::str::Chars>| {
            let c = chars.next().unwrap();
            if c == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            c
        };
        if c.is_whitespace() {
            bump(&mut chars);
            continue;
        }
        if c.is_ascii_digit() {
            let mut val: i64 = 0;
            while let Some(&d) = chars.peek() {
                if !d.is_ascii_digit() {
                    break;
                }
                bump(&mut chars);
                val = val
                    .checked_mul(10)
                    .and_then(|v| v.checked_add((d as u8 - b'0') as i64))
                    .ok_or_else(|| err(tline, tcol, "integer literal too large"))?;
            }
            out.push(Spanned { tok: Tok::Int(val), line: tline, col: tcol });
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let mut name = String::new();
            while let Some(&d) = chars.peek() {
                if !(d.is_ascii_alphanumeric() || d == '_') {
                    break;
                }
                name.push(bump(&mut chars));
            }
            out.push(Spanned { tok: Tok::Ident(name), line: tline, col: tcol });
            continue;
        }
        let tok = match c {
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '[' => Tok::LBracket,
            ']' => Tok::RBracket,
            ',' => Tok::Comma,
            ';' => Tok::Semi,
            '@' => Tok::At,
            '+' => Tok::Plus,
            '-' => Tok::Minus,
            '*' => Tok::Star,
            '/' => Tok::Slash,
            '^' => Tok::Caret,
            '!' => Tok::Bang,
            other => return Err(err(tline, tcol, format!("unexpected character '{}'", other))),
        };
        bump(&mut chars);
        out.push(Spanned { tok, line: tline, col: tcol });
    }
    out.push(Spanned { tok: Tok::Eof, line, col });
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Spanned {
        &self.toks[self.pos]
    }

    fn next(&mut self) -> Spanned {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<Spanned, TangleError> {
        let t = self.next();
        if t.tok == tok {
            Ok(t)
        } else {
            Err(err(t.line, t.col, format!("expected {}", what)))
        }
    }

    fn expect_int(&mut self, what: &str) -> Result<i64, TangleError> {
        let t = self.next();
        match t.tok {
            Tok::Int(v) => Ok(v),
            _ => Err(err(t.line, t.col, format!("expected {}", what))),
        }
    }

    fn expect_usize(&mut self, what: &str) -> Result<usize, TangleError> {
        let v = self.expect_int(what)?;
        usize::try_from(v).map_err(|_| {
            let t = self.peek().clone();
            err(t.line, t.col, format!("{} must be nonnegative", what))
        })
    }

    // sum := compose (("+" | "-") compose)*
    fn sum(&mut self) -> Result<SkeinExpr, TangleError> {
        let mut acc = self.composition()?;
        loop {
            match self.peek().tok {
                Tok::Plus => {
                    self.next();
                    acc = SkeinExpr::Add(Box::new(acc), Box::new(self.composition()?));
                }
                Tok::Minus => {
                    self.next();
                    acc = SkeinExpr::Sub(Box::new(acc), Box::new(self.composition()?));
                }
                _ => return Ok(acc),
            }
        }
    }

    // compose := tensor (";" tensor)*, reading bottom to top
    fn composition(&mut self) -> Result<SkeinExpr, TangleError> {
        let mut acc = self.tensor()?;
        while self.peek().tok == Tok::Semi {
            self.next();
            acc = acc.compose(self.tensor()?);
        }
        Ok(acc)
    }

    // tensor := unit ("@" unit)*
    fn tensor(&mut self) -> Result<SkeinExpr, TangleError> {
        let mut acc = self.unit()?;
        while self.peek().tok == Tok::At {
            self.next();
            acc = acc.tensor(self.unit()?);
        }
        Ok(acc)
    }

    // unit := "-" unit | scalar "*"? unit | factor
    fn unit(&mut self) -> Result<SkeinExpr, TangleError> {
        match &self.peek().tok {
            Tok::Minus => {
                self.next();
                let inner = self.unit()?;
                Ok(SkeinExpr::Scale(ScalarExpr::Rational(-Rat::from_integer(BigInt::from(1))), Box::new(inner)))
            }
            Tok::Int(_) | Tok::LBracket => {
                let s = self.scalar()?;
                if self.peek().tok == Tok::Star {
                    self.next();
                }
                Ok(SkeinExpr::Scale(s, Box::new(self.unit()?)))
            }
            Tok::Ident(name) if name == "q" => {
                let s = self.scalar()?;
                if self.peek().tok == Tok::Star {
                    self.next();
                }
                Ok(SkeinExpr::Scale(s, Box::new(self.unit()?)))
            }
            _ => self.factor(),
        }
    }

    // scalar := int ("/" int)? | "[" k "]" "!"? | "q" "^" "(" e "/" 2 ")"
    fn scalar(&mut self) -> Result<ScalarExpr, TangleError> {
        let t = self.next();
        match t.tok {
            Tok::Int(num) => {
                if self.peek().tok == Tok::Slash {
                    self.next();
                    let den = self.expect_int("denominator")?;
                    if den == 0 {
                        return Err(err(t.line, t.col, "zero denominator"));
                    }
                    Ok(ScalarExpr::Rational(Rat::new(BigInt::from(num), BigInt::from(den))))
                } else {
                    Ok(ScalarExpr::Rational(Rat::from_integer(BigInt::from(num))))
                }
            }
            Tok::LBracket => {
                let k = self.expect_usize("quantum integer argument")?;
                self.expect(Tok::RBracket, "']'")?;
                if self.peek().tok == Tok::Bang {
                    self.next();
                    Ok(ScalarExpr::QuantumFact(k as u32))
                } else {
                    Ok(ScalarExpr::QuantumInt(k as u32))
                }
            }
            Tok::Ident(name) if name == "q" => {
                self.expect(Tok::Caret, "'^'")?;
                self.expect(Tok::LParen, "'('")?;
                let neg = if self.peek().tok == Tok::Minus {
                    self.next();
                    true
                } else {
                    false
                };
                let e = self.expect_int("half-power exponent")?;
                self.expect(Tok::Slash, "'/'")?;
                let two = self.next();
                if two.tok != Tok::Int(2) {
                    return Err(err(two.line, two.col, "expected half-power denominator 2"));
                }
                self.expect(Tok::RParen, "')'")?;
                Ok(ScalarExpr::QHalfPower(if neg { -e } else { e }))
            }
            _ => Err(err(t.line, t.col, "expected scalar literal")),
        }
    }

    fn factor(&mut self) -> Result<SkeinExpr, TangleError> {
        let t = self.next();
        match &t.tok {
            Tok::LParen => {
                let e = self.sum()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(e)
            }
            Tok::Ident(name) => self.atom(name.clone(), t.line, t.col),
            _ => Err(err(t.line, t.col, "expected an expression")),
        }
    }

    fn args2(&mut self) -> Result<(usize, usize), TangleError> {
        self.expect(Tok::LParen, "'('")?;
        let k = self.expect_usize("strand count")?;
        self.expect(Tok::Comma, "','")?;
        let i = self.expect_usize("position")?;
        self.expect(Tok::RParen, "')'")?;
        Ok((k, i))
    }

    fn args1(&mut self) -> Result<usize, TangleError> {
        self.expect(Tok::LParen, "'('")?;
        let k = self.expect_usize("argument")?;
        self.expect(Tok::RParen, "')'")?;
        Ok(k)
    }

    fn atom(&mut self, name: String, line: usize, col: usize) -> Result<SkeinExpr, TangleError> {
        match name.as_str() {
            "id" => Ok(SkeinExpr::Id(self.args1()?)),
            "cup" => {
                let (k, i) = self.args2()?;
                Ok(SkeinExpr::Cup(k, i))
            }
            "cap" => {
                let (k, i) = self.args2()?;
                Ok(SkeinExpr::Cap(k, i))
            }
            "over" => {
                let (k, i) = self.args2()?;
                Ok(SkeinExpr::Over(k, i))
            }
            "under" => {
                let (k, i) = self.args2()?;
                Ok(SkeinExpr::Under(k, i))
            }
            "e" => {
                let (k, i) = self.args2()?;
                Ok(SkeinExpr::E(k, i))
            }
            "jw" => Ok(SkeinExpr::Jw(self.args1()?)),
            "jw2n1" => Ok(SkeinExpr::Jw2n1),
            "jwhat" => Ok(SkeinExpr::JwHat(self.args1()?)),
            "tjw" => Ok(SkeinExpr::ThickJw(self.args1()?)),
            "cable" => {
                self.expect(Tok::LParen, "'('")?;
                let inner = self.sum()?;
                self.expect(Tok::Comma, "','")?;
                let c = self.expect_usize("cable multiplicity")?;
                self.expect(Tok::RParen, "')'")?;
                Ok(SkeinExpr::Cable(Box::new(inner), c))
            }
            "encircle" => {
                self.expect(Tok::LParen, "'('")?;
                let m = self.expect_usize("strand count")?;
                self.expect(Tok::Comma, "','")?;
                let poly = self.poly()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(SkeinExpr::Encircle(m, poly))
            }
            other => Err(err(line, col, format!("unknown atom '{}'", other))),
        }
    }

    // poly := "T" "(" n ")" | "S" "(" n ")" | integer polynomial in x
    fn poly(&mut self) -> Result<PolySpec, TangleError> {
        if let Tok::Ident(name) = &self.peek().tok {
            if name == "T" || name == "S" {
                let first = name.clone();
                self.next();
                let n = self.args1()? as u32;
                return Ok(if first == "T" { PolySpec::T(n) } else { PolySpec::S(n) });
            }
        }
        let mut poly = IntPoly::zero();
        let mut any = false;
        loop {
            let sign = match self.peek().tok {
                Tok::Plus => {
                    self.next();
                    1
                }
                Tok::Minus => {
                    self.next();
                    -1
                }
                _ => {
                    if any {
                        break;
                    }
                    1
                }
            };
            let t = self.peek().clone();
            let coeff = match t.tok {
                Tok::Int(v) => {
                    self.next();
                    v
                }
                Tok::Ident(ref name) if name == "x" => 1,
                _ => return Err(err(t.line, t.col, "expected polynomial term")),
            };
            let degree = if matches!(&self.peek().tok, Tok::Ident(name) if name == "x") {
                self.next();
                if self.peek().tok == Tok::Caret {
                    self.next();
                    self.expect_usize("exponent")? as u32
                } else {
                    1
                }
            } else {
                0
            };
            poly = poly.add(&IntPoly::monomial(degree, sign * coeff));
            any = true;
        }
        Ok(poly).map(PolySpec::Poly)
    }
}

/// Parse a tangle expression. Errors carry a 1-based line and column.
pub fn parse(src: &str) -> Result<SkeinExpr, TangleError> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0 };
    let e = p.sum()?;
    let t = p.peek().clone();
    if t.tok != Tok::Eof {
        return Err(err(t.line, t.col, "unexpected trailing input"));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn composition_root() {
        let e = parse("jw(3) ; (id(1) @ cap(3,0))").unwrap();
        match e {
            SkeinExpr::Compose(lo, hi) => {
                assert_eq!(*lo, SkeinExpr::Jw(3));
                assert!(matches!(*hi, SkeinExpr::Tensor(_, _)));
            }
            other => panic!("expected composition, got {:?}", other),
        }
    }

    #[test]
    fn sum_with_scalar_child() {
        let e = parse("[2] * id(2) + e(2,0)").unwrap();
        match e {
            SkeinExpr::Add(l, r) => {
                assert_eq!(
                    *l,
                    SkeinExpr::Scale(ScalarExpr::QuantumInt(2), Box::new(SkeinExpr::Id(2)))
                );
                assert_eq!(*r, SkeinExpr::E(2, 0));
            }
            other => panic!("expected sum, got {:?}", other),
        }
    }

    #[test]
    fn tensor_binds_tighter_than_composition() {
        let e = parse("id(1) @ id(1) ; id(2)").unwrap();
        match e {
            SkeinExpr::Compose(lo, _) => assert!(matches!(*lo, SkeinExpr::Tensor(_, _))),
            other => panic!("expected composition at root, got {:?}", other),
        }
    }

    #[test]
    fn syntax_error_position() {
        let e = parse("jw(").unwrap_err();
        match e {
            TangleError::Syntax { line, col, .. } => {
                assert_eq!(line, 1);
                assert_eq!(col, 4);
            }
            other => panic!("expected syntax error, got {:?}", other),
        }
    }

    #[test]
    fn scalar_and_poly_forms() {
        assert!(parse("q^(3/2) id(1)").is_ok());
        assert!(parse("q^(-1/2) * id(1)").is_ok());
        assert!(parse("[3]! * id(2)").is_ok());
        assert!(parse("encircle(2, x^2-2)").is_ok());
        assert!(parse("encircle(1, T(2))").is_ok());
        assert!(parse("encircle(0, 2x^3-3x+1)").is_ok());
        assert!(parse("cable(e(2,0), 2)").is_ok());
        assert!(parse("q^(3/4) id(1)").is_err());
    }

    #[test]
    fn poly_term_values() {
        let e = parse("encircle(0, 2x^3-3x+1)").unwrap();
        match e {
            SkeinExpr::Encircle(0, PolySpec::Poly(p)) => {
                assert_eq!(p, IntPoly::from_pairs(&[(3, 2), (1, -3), (0, 1)]));
            }
            other => panic!("unexpected {:?}", other),
        }
    }
}
