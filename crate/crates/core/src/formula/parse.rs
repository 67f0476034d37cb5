//! Recursive-descent parser for formulas.
//!
//! ```text
//! expr     := quant | sum
//! quant    := ("inf" | "sup") ident "." expr
//! sum      := unary (("+" | "-.") (quant | unary))*
//! unary    := rational ["*" unary] | "d(" point "," point ")"
//!           | "max(" expr "," expr ")" | "min(" expr "," expr ")"
//!           | "abs(" expr "-" expr ")" | "(" expr ")"
//! rational := int ["/" positive-int]
//! ```

use std::fmt;

use num_bigint::BigInt;
use num_traits::Zero;
use thiserror::Error;

use super::{Formula, Term};
use crate::rat::Rat;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{col}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    UnexpectedChar(char),
    UnexpectedToken { found: String, expected: String },
    UnexpectedEnd { expected: String },
    MalformedRational(String),
    UnboundVariable(String),
    Rebound(String),
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::UnexpectedChar(c) => write!(f, "unexpected character `{c}`"),
            ParseErrorKind::UnexpectedToken { found, expected } => {
                write!(f, "expected {expected}, found `{found}`")
            }
            ParseErrorKind::UnexpectedEnd { expected } => write!(f, "expected {expected}, found end of input"),
            ParseErrorKind::MalformedRational(s) => write!(f, "malformed rational `{s}`"),
            ParseErrorKind::UnboundVariable(v) => write!(f, "unbound variable `{v}`"),
            ParseErrorKind::Rebound(v) => write!(f, "variable `{v}` is already bound here"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(BigInt),
    LParen,
    RParen,
    Comma,
    Dot,
    Plus,
    Minus,
    Monus,
    Star,
    Slash,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "{s}"),
            Tok::Int(n) => write!(f, "{n}"),
            Tok::LParen => write!(f, "("),
            Tok::RParen => write!(f, ")"),
            Tok::Comma => write!(f, ","),
            Tok::Dot => write!(f, "."),
            Tok::Plus => write!(f, "+"),
            Tok::Minus => write!(f, "-"),
            Tok::Monus => write!(f, "-."),
            Tok::Star => write!(f, "*"),
            Tok::Slash => write!(f, "/"),
        }
    }
}

struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Spanned>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut line, mut col) = (1usize, 1usize);
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        let err = |kind| ParseError { line: l0, col: c0, kind };
        if c == '\n' {
            line += 1;
            col = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        let mut width = 1;
        let tok = match c {
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            ',' => Tok::Comma,
            '+' => Tok::Plus,
            '*' => Tok::Star,
            '/' => Tok::Slash,
            '.' => Tok::Dot,
            '-' => {
                if chars.get(i + 1) == Some(&'.') {
                    width = 2;
                    Tok::Monus
                } else {
                    Tok::Minus
                }
            }
            c if c.is_ascii_digit() => {
                let start = i;
                let mut j = i;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
                // `1.5` and `1e3` are not rationals in this language.
                if j + 1 < chars.len() && chars[j] == '.' && chars[j + 1].is_ascii_digit()
                    || j < chars.len() && (chars[j] == 'e' || chars[j] == 'E')
                {
                    let mut k = j + 1;
                    while k < chars.len() && (chars[k].is_ascii_alphanumeric() || chars[k] == '.') {
                        k += 1;
                    }
                    let lit: String = chars[start..k].iter().collect();
                    return Err(err(ParseErrorKind::MalformedRational(lit)));
                }
                width = j - start;
                let lit: String = chars[start..j].iter().collect();
                Tok::Int(lit.parse().expect("digits"))
            }
            c if c.is_alphabetic() || c == '_' => {
                let start = i;
                let mut j = i;
                while j < chars.len() && (chars[j].is_alphanumeric() || chars[j] == '_' || chars[j] == '\'') {
                    j += 1;
                }
                width = j - start;
                Tok::Ident(chars[start..j].iter().collect())
            }
            other => return Err(err(ParseErrorKind::UnexpectedChar(other))),
        };
        out.push(Spanned { tok, line, col });
        i += width;
        col += width;
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<Spanned>,
    pos: usize,
    bound: Vec<String>,
    declared: Option<&'a [&'a str]>,
    end: (usize, usize),
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn here(&self) -> (usize, usize) {
        self.toks.get(self.pos).map_or(self.end, |s| (s.line, s.col))
    }

    fn fail<T>(&self, expected: &str) -> Result<T, ParseError> {
        let (line, col) = self.here();
        let kind = match self.peek() {
            Some(t) => ParseErrorKind::UnexpectedToken { found: t.to_string(), expected: expected.to_string() },
            None => ParseErrorKind::UnexpectedEnd { expected: expected.to_string() },
        };
        Err(ParseError { line, col, kind })
    }

    fn expect(&mut self, t: Tok) -> Result<(), ParseError> {
        if self.peek() == Some(&t) {
            self.pos += 1;
            Ok(())
        } else {
            self.fail(&format!("`{t}`"))
        }
    }

    fn keyword(&self) -> Option<&str> {
        match self.peek() {
            Some(Tok::Ident(s)) => Some(s.as_str()),
            _ => None,
        }
    }

    fn expr(&mut self) -> Result<Formula, ParseError> {
        match self.keyword() {
            Some("inf") | Some("sup") => self.quant(),
            _ => self.sum(),
        }
    }

    fn quant(&mut self) -> Result<Formula, ParseError> {
        let is_inf = self.keyword() == Some("inf");
        self.pos += 1;
        let (line, col) = self.here();
        let var = match self.peek() {
            Some(Tok::Ident(v)) if !is_reserved(v) => v.clone(),
            _ => return self.fail("a variable name"),
        };
        if self.bound.contains(&var) {
            return Err(ParseError { line, col, kind: ParseErrorKind::Rebound(var) });
        }
        self.pos += 1;
        self.expect(Tok::Dot)?;
        self.bound.push(var.clone());
        let body = self.expr()?;
        self.bound.pop();
        Ok(if is_inf { Formula::Inf(var, Box::new(body)) } else { Formula::Sup(var, Box::new(body)) })
    }

    fn sum(&mut self) -> Result<Formula, ParseError> {
        let mut acc = self.unary()?;
        loop {
            let monus = match self.peek() {
                Some(Tok::Plus) => false,
                Some(Tok::Monus) => true,
                _ => return Ok(acc),
            };
            self.pos += 1;
            let rhs = match self.keyword() {
                Some("inf") | Some("sup") => self.quant()?,
                _ => self.unary()?,
            };
            acc = if monus {
                Formula::Monus(Box::new(acc), Box::new(rhs))
            } else {
                Formula::Add(Box::new(acc), Box::new(rhs))
            };
        }
    }

    fn rational(&mut self) -> Result<Rat, ParseError> {
        let (line, col) = self.here();
        let Some(Tok::Int(n)) = self.peek().cloned() else {
            return self.fail("a rational");
        };
        self.pos += 1;
        if self.peek() != Some(&Tok::Slash) {
            return Ok(Rat::from_big(n, BigInt::from(1)));
        }
        self.pos += 1;
        match self.peek().cloned() {
            Some(Tok::Int(d)) if !d.is_zero() => {
                self.pos += 1;
                Ok(Rat::from_big(n, d))
            }
            Some(Tok::Int(_)) => Err(ParseError {
                line,
                col,
                kind: ParseErrorKind::MalformedRational(format!("{n}/0")),
            }),
            _ => self.fail("a positive denominator"),
        }
    }

    fn point(&mut self) -> Result<Term, ParseError> {
        let (line, col) = self.here();
        match self.peek().cloned() {
            Some(Tok::Ident(s)) if s == "p" => {
                self.pos += 1;
                Ok(Term::P)
            }
            Some(Tok::Ident(s)) if !is_reserved(&s) => {
                self.pos += 1;
                if let Some(decl) = self.declared {
                    if !self.bound.contains(&s) && !decl.contains(&s.as_str()) {
                        return Err(ParseError { line, col, kind: ParseErrorKind::UnboundVariable(s) });
                    }
                }
                Ok(Term::Name(s))
            }
            _ => self.fail("a point (`p` or a name)"),
        }
    }

    fn pair(&mut self, sep: Tok) -> Result<(Formula, Formula), ParseError> {
        self.expect(Tok::LParen)?;
        let a = self.expr()?;
        self.expect(sep)?;
        let b = self.expr()?;
        self.expect(Tok::RParen)?;
        Ok((a, b))
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        match self.peek().cloned() {
            Some(Tok::Int(_)) => {
                let c = self.rational()?;
                if self.peek() == Some(&Tok::Star) {
                    self.pos += 1;
                    let e = match self.keyword() {
                        Some("inf") | Some("sup") => self.quant()?,
                        _ => self.unary()?,
                    };
                    Ok(Formula::Scale(c, Box::new(e)))
                } else {
                    Ok(Formula::Const(c))
                }
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Some(Tok::Ident(k)) => match k.as_str() {
                "d" => {
                    self.pos += 1;
                    self.expect(Tok::LParen)?;
                    let a = self.point()?;
                    self.expect(Tok::Comma)?;
                    let b = self.point()?;
                    self.expect(Tok::RParen)?;
                    Ok(Formula::Dist(a, b))
                }
                "max" | "min" => {
                    self.pos += 1;
                    let (a, b) = self.pair(Tok::Comma)?;
                    Ok(if k == "max" {
                        Formula::Max(Box::new(a), Box::new(b))
                    } else {
                        Formula::Min(Box::new(a), Box::new(b))
                    })
                }
                "abs" => {
                    self.pos += 1;
                    let (a, b) = self.pair(Tok::Minus)?;
                    Ok(Formula::AbsDiff(Box::new(a), Box::new(b)))
                }
                _ => self.fail("an expression"),
            },
            _ => self.fail("an expression"),
        }
    }
}

fn is_reserved(s: &str) -> bool {
    matches!(s, "inf" | "sup" | "max" | "min" | "abs" | "d" | "p")
}

fn run(text: &str, declared: Option<&[&str]>) -> Result<Formula, ParseError> {
    let toks = lex(text)?;
    let end = {
        let lines: Vec<&str> = text.split('\n').collect();
        (lines.len(), lines.last().map_or(0, |l| l.chars().count()) + 1)
    };
    let mut p = Parser { toks, pos: 0, bound: Vec::new(), declared, end };
    let f = p.expr()?;
    if p.pos < p.toks.len() {
        return p.fail("end of input");
    }
    Ok(f)
}

/// Parse a formula; every free name is treated as a declared variable or
/// parameter.
pub fn parse_formula(text: &str) -> Result<Formula, ParseError> {
    run(text, None)
}

/// Parse a formula whose free names must all appear in `declared`.
pub fn parse_formula_declared(text: &str, declared: &[&str]) -> Result<Formula, ParseError> {
    run(text, Some(declared))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat;

    fn d(a: &str, b: &str) -> Formula {
        let t = |s: &str| if s == "p" { Term::P } else { Term::Name(s.into()) };
        Formula::Dist(t(a), t(b))
    }

    #[test]
    fn truncated_subtraction() {
        assert_eq!(
            parse_formula("d(x,p) -. 1/2").unwrap(),
            Formula::Monus(Box::new(d("x", "p")), Box::new(Formula::Const(rat!(1 / 2))))
        );
    }

    #[test]
    fn quantified_has_no_free_vars() {
        let f = parse_formula("sup x. d(x,p)").unwrap();
        assert_eq!(f, Formula::Sup("x".into(), Box::new(d("x", "p"))));
        assert!(f.free_vars().is_empty());
    }

    #[test]
    fn nested_connectives() {
        let f = parse_formula("max(d(x,y), min(d(x,p), 3/2))").unwrap();
        assert_eq!(
            f,
            Formula::Max(
                Box::new(d("x", "y")),
                Box::new(Formula::Min(Box::new(d("x", "p")), Box::new(Formula::Const(rat!(3 / 2)))))
            )
        );
        assert_eq!(f.free_vars().into_iter().collect::<Vec<_>>(), vec!["x", "y"]);
    }

    #[test]
    fn scale_binds_tighter_than_plus() {
        let f = parse_formula("2 * d(x,p) + 1").unwrap();
        assert!(matches!(f, Formula::Add(ref a, _) if matches!(**a, Formula::Scale(..))));
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse_formula("d(x,p) +\n  max(1, )").unwrap_err();
        assert_eq!((e.line, e.col), (2, 10));
        let e = parse_formula("d(x, 2)").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UnexpectedToken { found: "2".into(), expected: "a point (`p` or a name)".into() });
        let e = parse_formula("1.5 + d(x,p)").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::MalformedRational("1.5".into()));
        let e = parse_formula("3/0").unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::MalformedRational(_)));
        let e = parse_formula("d(x,p) d(x,p)").unwrap_err();
        assert_eq!((e.line, e.col), (1, 8));
    }

    #[test]
    fn unbound_and_rebound_variables() {
        let e = parse_formula_declared("sup x. d(x,y)", &["a"]).unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UnboundVariable("y".into()));
        assert_eq!((e.line, e.col), (1, 12));
        assert!(parse_formula_declared("sup x. d(x,y)", &["y"]).is_ok());
        let e = parse_formula("sup x. inf x. d(x,p)").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::Rebound("x".into()));
    }
}
