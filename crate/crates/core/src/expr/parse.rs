// SPDX-License-Identifier: Apache-2.0

//! Recursive-descent parser for the expression language:
//!
//! ```text
//! expr    := term (("+"|"-") term)* ;
//! term    := factor (("*"|"/") factor)* ;
//! factor  := base ("^" signed_rational)? ;
//! base    := number | ident | ident "(" expr ")" | "(" expr ")" | "-" factor ;
//! ```
//!
//! `x1..xn` and `y1..yn` are coordinates. A declared opaque function may be
//! suffixed with primes (`f'(x1)`, `f''(x1)`) to denote its derivatives. The
//! exponent is an integer, or a fraction in parentheses: `y1^(-1/2)`; a
//! bare `y1^2/2` divides by 2. Integer literals are exact;
//! literals with a decimal point or exponent are reals.

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use super::{Expr, Func, Number, Rational, Var};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ParseErrorKind {
    UnexpectedChar(char),
    UnexpectedEnd,
    Expected(&'static str),
    UnknownIdentifier(String),
    IndexOutOfRange { name: String, n: usize },
    BadNumber(String),
    BadExponent,
    NotAFunction(String),
    TrailingInput,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub kind: ParseErrorKind,
    /// Byte offset into the source text.
    pub pos: usize,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ParseErrorKind::UnexpectedChar(c) => write!(f, "unexpected character '{c}'"),
            ParseErrorKind::UnexpectedEnd => write!(f, "unexpected end of input"),
            ParseErrorKind::Expected(what) => write!(f, "expected {what}"),
            ParseErrorKind::UnknownIdentifier(s) => write!(f, "unknown identifier `{s}`"),
            ParseErrorKind::IndexOutOfRange { name, n } => {
                write!(f, "coordinate `{name}` out of range for dimension {n}")
            }
            ParseErrorKind::BadNumber(s) => write!(f, "malformed number `{s}`"),
            ParseErrorKind::BadExponent => write!(f, "exponent must be a signed rational"),
            ParseErrorKind::NotAFunction(s) => write!(f, "`{s}` is not a function"),
            ParseErrorKind::TrailingInput => write!(f, "trailing input"),
        }?;
        write!(f, " at offset {}", self.pos)
    }
}

impl core::error::Error for ParseError {}

/// Declared dimension and symbol names an expression may reference.
#[derive(Clone, Debug, Default)]
pub struct ParseContext {
    pub n: usize,
    pub params: Vec<String>,
    pub functions: Vec<String>,
}

impl ParseContext {
    pub fn new(n: usize) -> ParseContext {
        ParseContext {
            n,
            ..Default::default()
        }
    }

    pub fn with_param(mut self, name: &str) -> Self {
        self.params.push(name.to_string());
        self
    }

    pub fn with_function(mut self, name: &str) -> Self {
        self.functions.push(name.to_string());
        self
    }
}

pub fn parse(text: &str, ctx: &ParseContext) -> Result<Expr, ParseError> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
        ctx,
    };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.err(ParseErrorKind::TrailingInput));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    ctx: &'a ParseContext,
}

impl<'a> Parser<'a> {
    fn err(&self, kind: ParseErrorKind) -> ParseError {
        ParseError {
            kind,
            pos: self.pos,
        }
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

    fn expect(&mut self, c: u8, what: &'static str) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else if self.peek().is_none() {
            Err(self.err(ParseErrorKind::UnexpectedEnd))
        } else {
            Err(self.err(ParseErrorKind::Expected(what)))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                lhs = Expr::Add(alloc::vec![lhs, self.term()?]);
            } else if self.eat(b'-') {
                let rhs = self.term()?;
                lhs = Expr::Add(alloc::vec![lhs, Expr::Neg(Box::new(rhs))]);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            if self.eat(b'*') {
                lhs = Expr::Mul(alloc::vec![lhs, self.factor()?]);
            } else if self.eat(b'/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.factor()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        let base = self.base()?;
        if self.eat(b'^') {
            let q = self.signed_rational()?;
            return Ok(Expr::Pow(Box::new(base), q));
        }
        Ok(base)
    }

    /// `k`, `-k`, or a parenthesized `(p/q)`; a bare `y^2/2` divides by 2.
    fn signed_rational(&mut self) -> Result<Rational, ParseError> {
        if self.eat(b'(') {
            let q = self.rational_body(true)?;
            self.expect(b')', "')'")?;
            return Ok(q);
        }
        self.rational_body(false)
    }

    fn rational_body(&mut self, allow_fraction: bool) -> Result<Rational, ParseError> {
        let neg = if self.eat(b'-') {
            true
        } else {
            self.eat(b'+');
            false
        };
        let num = self.integer()?;
        let den = if allow_fraction && self.eat(b'/') {
            self.integer()?
        } else {
            1
        };
        let q = Rational::new(num, den).ok_or_else(|| self.err(ParseErrorKind::BadExponent))?;
        Ok(if neg { -q } else { q })
    }

    fn integer(&mut self) -> Result<i64, ParseError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err(ParseErrorKind::BadExponent));
        }
        let s = core::str::from_utf8(&self.src[start..self.pos]).unwrap();
        s.parse()
            .map_err(|_| self.err(ParseErrorKind::BadNumber(s.to_string())))
    }

    fn base(&mut self) -> Result<Expr, ParseError> {
        let Some(c) = self.peek() else {
            return Err(self.err(ParseErrorKind::UnexpectedEnd));
        };
        match c {
            b'-' => {
                self.pos += 1;
                Ok(Expr::Neg(Box::new(self.factor()?)))
            }
            b'(' => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')', "')'")?;
                Ok(e)
            }
            b'0'..=b'9' | b'.' => self.number(),
            c if c.is_ascii_alphabetic() || c == b'_' => self.ident(),
            other => Err(self.err(ParseErrorKind::UnexpectedChar(other as char))),
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let mut real = false;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos < self.src.len() && self.src[self.pos] == b'.' {
            real = true;
            self.pos += 1;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
        }
        if self.pos < self.src.len() && matches!(self.src[self.pos], b'e' | b'E') {
            let save = self.pos;
            self.pos += 1;
            if self.pos < self.src.len() && matches!(self.src[self.pos], b'+' | b'-') {
                self.pos += 1;
            }
            let digits = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if digits == self.pos {
                self.pos = save;
            } else {
                real = true;
            }
        }
        let text = core::str::from_utf8(&self.src[start..self.pos]).unwrap();
        let bad = || ParseError {
            kind: ParseErrorKind::BadNumber(text.to_string()),
            pos: start,
        };
        if real {
            let v: f64 = text.parse().map_err(|_| bad())?;
            Ok(Expr::Const(Number::Real(v)))
        } else {
            match text.parse::<i64>() {
                Ok(v) => Ok(Expr::int(v)),
                Err(_) => {
                    let v: f64 = text.parse().map_err(|_| bad())?;
                    Ok(Expr::Const(Number::Real(v)))
                }
            }
        }
    }

    fn ident(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = core::str::from_utf8(&self.src[start..self.pos]).unwrap();
        let mut primes = 0u32;
        while self.pos < self.src.len() && self.src[self.pos] == b'\'' {
            primes += 1;
            self.pos += 1;
        }
        let unknown = |pos| ParseError {
            kind: ParseErrorKind::UnknownIdentifier(name.to_string()),
            pos,
        };
        if self.peek() == Some(b'(') {
            let call_pos = self.pos;
            self.pos += 1;
            let arg = self.expr()?;
            self.expect(b')', "')'")?;
            if primes == 0 {
                if let Some(f) = Func::from_name(name) {
                    return Ok(Expr::Func(f, Box::new(arg)));
                }
            }
            if self.ctx.functions.iter().any(|f| f == name) {
                return Ok(Expr::Apply {
                    name: Arc::from(name),
                    order: primes,
                    arg: Box::new(arg),
                });
            }
            if self.ctx.params.iter().any(|p| p == name) || coord(name).is_some() {
                return Err(ParseError {
                    kind: ParseErrorKind::NotAFunction(name.to_string()),
                    pos: call_pos,
                });
            }
            return Err(unknown(start));
        }
        if primes > 0 {
            return Err(self.err(ParseErrorKind::Expected("'(' after primed function")));
        }
        if let Some((is_x, k)) = coord(name) {
            if k == 0 || k > self.ctx.n {
                return Err(ParseError {
                    kind: ParseErrorKind::IndexOutOfRange {
                        name: name.to_string(),
                        n: self.ctx.n,
                    },
                    pos: start,
                });
            }
            return Ok(Expr::Var(if is_x { Var::X(k - 1) } else { Var::Y(k - 1) }));
        }
        if self.ctx.params.iter().any(|p| p == name) {
            return Ok(Expr::Param(Arc::from(name)));
        }
        Err(unknown(start))
    }
}

/// `x<k>` / `y<k>` → `(is_x, k)`.
fn coord(name: &str) -> Option<(bool, usize)> {
    let (head, digits) = name.split_at(1);
    let is_x = match head {
        "x" => true,
        "y" => false,
        _ => return None,
    };
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok().map(|k| (is_x, k))
}
