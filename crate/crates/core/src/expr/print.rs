// SPDX-License-Identifier: Apache-2.0

//! Text rendering that re-parses to an equal canonical form.

use alloc::string::String;
use core::fmt::{self, Write};

use super::{Expr, Number, Rational};

const PREC_ADD: u8 = 1;
const PREC_MUL: u8 = 2;
const PREC_POW_BASE: u8 = 4;

/// `Some(|t|)` when `t` renders with a leading minus sign.
fn negated(t: &Expr) -> Option<Expr> {
    match t {
        Expr::Neg(a) => Some((**a).clone()),
        Expr::Const(c) if c.is_negative() => Some(Expr::Const(-*c)),
        Expr::Mul(fs) => match fs.first() {
            Some(Expr::Const(c)) if c.is_negative() => {
                let c = -*c;
                let mut rest: alloc::vec::Vec<Expr> = fs[1..].to_vec();
                if !c.is_one() {
                    rest.insert(0, Expr::Const(c));
                }
                Some(match rest.len() {
                    0 => Expr::one(),
                    1 => rest.pop().unwrap(),
                    _ => Expr::Mul(rest),
                })
            }
            _ => None,
        },
        _ => None,
    }
}

fn write_exponent(f: &mut fmt::Formatter<'_>, q: Rational) -> fmt::Result {
    if q.is_integer() && !q.is_negative() {
        write!(f, "^{q}")
    } else {
        write!(f, "^({q})")
    }
}

fn write_number(f: &mut fmt::Formatter<'_>, c: Number, prec: u8) -> fmt::Result {
    let compound = match c {
        Number::Rational(r) => r.is_negative() || !r.is_integer(),
        Number::Real(v) => v < 0.0,
    };
    let needs_parens = match c {
        Number::Rational(r) if !r.is_integer() && !r.is_negative() => prec > PREC_MUL,
        _ => compound && prec > PREC_ADD,
    };
    if needs_parens {
        write!(f, "({c})")
    } else {
        write!(f, "{c}")
    }
}

fn write_expr(f: &mut fmt::Formatter<'_>, e: &Expr, prec: u8) -> fmt::Result {
    match e {
        Expr::Const(c) => write_number(f, *c, prec),
        Expr::Var(super::Var::X(i)) => write!(f, "x{}", i + 1),
        Expr::Var(super::Var::Y(a)) => write!(f, "y{}", a + 1),
        Expr::Param(p) => f.write_str(p),
        Expr::Func(g, a) => {
            write!(f, "{}(", g.name())?;
            write_expr(f, a, 0)?;
            f.write_char(')')
        }
        Expr::Apply { name, order, arg } => {
            f.write_str(name)?;
            for _ in 0..*order {
                f.write_char('\'')?;
            }
            f.write_char('(')?;
            write_expr(f, arg, 0)?;
            f.write_char(')')
        }
        Expr::Neg(a) => {
            if prec > PREC_ADD {
                f.write_char('(')?;
            }
            f.write_char('-')?;
            write_expr(f, a, PREC_MUL)?;
            if prec > PREC_ADD {
                f.write_char(')')?;
            }
            Ok(())
        }
        Expr::Add(ts) => {
            if ts.is_empty() {
                return f.write_char('0');
            }
            let paren = prec > PREC_ADD;
            if paren {
                f.write_char('(')?;
            }
            for (k, t) in ts.iter().enumerate() {
                match negated(t) {
                    Some(abs) => {
                        f.write_str(if k == 0 { "-" } else { " - " })?;
                        write_expr(f, &abs, PREC_MUL)?;
                    }
                    None => {
                        if k > 0 {
                            f.write_str(" + ")?;
                        }
                        write_expr(f, t, PREC_ADD)?;
                    }
                }
            }
            if paren {
                f.write_char(')')?;
            }
            Ok(())
        }
        Expr::Mul(fs) => {
            if fs.is_empty() {
                return f.write_char('1');
            }
            if let Some(abs) = negated(e) {
                if prec > PREC_ADD {
                    f.write_char('(')?;
                }
                f.write_char('-')?;
                write_expr(f, &abs, PREC_MUL)?;
                if prec > PREC_ADD {
                    f.write_char(')')?;
                }
                return Ok(());
            }
            let paren = prec > PREC_MUL;
            if paren {
                f.write_char('(')?;
            }
            let (den, mut num): (alloc::vec::Vec<&Expr>, alloc::vec::Vec<&Expr>) = fs
                .iter()
                .partition(|g| matches!(g, Expr::Pow(_, q) if q.is_negative() && q.is_integer()));
            // Constants, then parameters, then the rest.
            num.sort_by_key(|g| match g {
                Expr::Const(_) => 0,
                Expr::Param(_) => 1,
                _ => 2,
            });
            if num.is_empty() {
                f.write_char('1')?;
            }
            for (k, g) in num.iter().enumerate() {
                if k > 0 {
                    f.write_char('*')?;
                }
                write_expr(f, g, PREC_MUL + 1)?;
            }
            for g in den {
                let Expr::Pow(b, q) = g else { unreachable!() };
                f.write_char('/')?;
                let inv = -*q;
                if inv.is_one() {
                    write_expr(f, b, PREC_POW_BASE)?;
                } else {
                    write_expr(f, b, PREC_POW_BASE)?;
                    write_exponent(f, inv)?;
                }
            }
            if paren {
                f.write_char(')')?;
            }
            Ok(())
        }
        Expr::Div(a, b) => {
            let paren = prec > PREC_MUL;
            if paren {
                f.write_char('(')?;
            }
            write_expr(f, a, PREC_MUL)?;
            f.write_char('/')?;
            write_expr(f, b, PREC_MUL + 1)?;
            if paren {
                f.write_char(')')?;
            }
            Ok(())
        }
        Expr::Pow(b, q) => {
            let paren = prec >= PREC_POW_BASE;
            if paren {
                f.write_char('(')?;
            }
            write_expr(f, b, PREC_POW_BASE)?;
            write_exponent(f, *q)?;
            if paren {
                f.write_char(')')?;
            }
            Ok(())
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(f, self, 0)
    }
}

impl Expr {
    /// Canonical text: the printed form of [`Expr::simplify`].
    pub fn canonical_string(&self) -> String {
        let mut s = String::new();
        let _ = write!(s, "{}", self.simplify());
        s
    }
}

#[cfg(test)]
mod tests {
    use crate::expr::{parse, ParseContext};
    use alloc::string::ToString;

    fn ctx() -> ParseContext {
        ParseContext::new(3).with_param("A").with_function("f")
    }

    fn round_trip(text: &str) {
        let e = parse(text, &ctx()).unwrap().simplify();
        let printed = e.to_string();
        let back = parse(&printed, &ctx())
            .unwrap_or_else(|err| panic!("`{printed}` does not re-parse: {err}"))
            .simplify();
        assert_eq!(back, e, "printed as `{printed}`");
    }

    #[test]
    fn canonical_forms_round_trip() {
        for t in [
            "A*y1/y3",
            "-A*y1/y3^2",
            "x2 - 1/2*ln(y1/y2)",
            "-(2*y2*x1 - y1)/(y1*y2)",
            "y1^(1/2) + sqrt(2)*y2",
            "f''(x1)*y1^2 - 3/7",
            "0.25*x1 - 1e-20",
            "exp(-x1)*cos(x2 + y3)",
            "(x1 + y1)^(-1/3)",
            "1/(1 + y1^2)",
        ] {
            round_trip(t);
        }
    }

    #[test]
    fn readable_output() {
        let e = parse("A*y1/y3", &ctx()).unwrap().simplify();
        assert_eq!(e.to_string(), "A*y1/y3");
        let e = parse("y1 - 2*y2", &ctx()).unwrap().simplify();
        assert_eq!(e.to_string(), "y1 - 2*y2");
    }
}
