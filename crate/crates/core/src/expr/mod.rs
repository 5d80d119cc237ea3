// SPDX-License-Identifier: Apache-2.0

//! Expression trees over the coordinates `x1..xn`, `y1..yn` of `TR^n`, named
//! parameters and opaque unary functions.
//!
//! Trees produced by [`parse`] keep the shape of the source text (binary
//! `Add`/`Mul`, `Neg`, `Div`, `sqrt`). [`Expr::simplify`] rewrites any tree into
//! canonical form: n-ary sorted sums of monomials, folded constants, no `Neg`,
//! `Div` or `sqrt` nodes. Structural equality of canonical forms is the exact
//! identity test used throughout the crate.

mod diff;
mod eval;
mod number;
mod parse;
mod print;
mod simplify;
mod zero;

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

pub use eval::{EvalError, FnBinding, FunctionBindings, Point};
pub use number::{Number, Rational};
pub use parse::{parse, ParseContext, ParseError, ParseErrorKind};
pub use zero::{is_zero, zero_test, ZeroReport, ZeroTest};

/// A coordinate on `TR^n`. Indices are zero-based; text uses `x1..xn`, `y1..yn`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    X(usize),
    Y(usize),
}

impl Var {
    pub fn index(self) -> usize {
        match self {
            Var::X(i) | Var::Y(i) => i,
        }
    }

    /// Position in the `2n` slot layout `(x1..xn, y1..yn)`.
    pub fn slot(self, n: usize) -> usize {
        match self {
            Var::X(i) => i,
            Var::Y(i) => n + i,
        }
    }

    pub fn from_slot(slot: usize, n: usize) -> Var {
        if slot < n {
            Var::X(slot)
        } else {
            Var::Y(slot - n)
        }
    }
}

/// Built-in unary functions. `neg` has its own node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Ln,
    Sqrt,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Expr {
    Const(Number),
    Var(Var),
    Param(Arc<str>),
    Neg(Box<Expr>),
    Func(Func, Box<Expr>),
    /// `name^(order)(arg)`: the `order`-th derivative of an opaque unary function.
    Apply {
        name: Arc<str>,
        order: u32,
        arg: Box<Expr>,
    },
    Add(Vec<Expr>),
    Mul(Vec<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Rational),
}

impl Default for Expr {
    fn default() -> Self {
        Expr::zero()
    }
}

impl From<i64> for Expr {
    fn from(v: i64) -> Self {
        Expr::int(v)
    }
}

impl From<Var> for Expr {
    fn from(v: Var) -> Self {
        Expr::Var(v)
    }
}

impl Expr {
    pub fn zero() -> Expr {
        Expr::Const(Number::ZERO)
    }

    pub fn one() -> Expr {
        Expr::Const(Number::ONE)
    }

    pub fn int(v: i64) -> Expr {
        Expr::Const(Number::int(v))
    }

    pub fn rational(num: i64, den: i64) -> Expr {
        Expr::Const(Number::Rational(
            Rational::new(num, den).expect("nonzero denominator"),
        ))
    }

    pub fn real(v: f64) -> Expr {
        Expr::Const(Number::Real(v))
    }

    pub fn x(i: usize) -> Expr {
        Expr::Var(Var::X(i))
    }

    pub fn y(a: usize) -> Expr {
        Expr::Var(Var::Y(a))
    }

    pub fn param(name: &str) -> Expr {
        Expr::Param(Arc::from(name))
    }

    pub fn apply(name: &str, order: u32, arg: Expr) -> Expr {
        Expr::Apply {
            name: Arc::from(name),
            order,
            arg: Box::new(arg),
        }
    }

    pub fn func(f: Func, arg: Expr) -> Expr {
        Expr::Func(f, Box::new(arg))
    }

    pub fn powi(self, k: i64) -> Expr {
        Expr::Pow(Box::new(self), Rational::integer(k))
    }

    pub fn pow(self, q: Rational) -> Expr {
        Expr::Pow(Box::new(self), q)
    }

    pub fn scale(self, c: Number) -> Expr {
        Expr::Mul(alloc::vec![Expr::Const(c), self])
    }

    pub fn as_const(&self) -> Option<Number> {
        match self {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero_literal(&self) -> bool {
        matches!(self, Expr::Const(c) if c.is_zero())
    }

    pub fn is_one_literal(&self) -> bool {
        matches!(self, Expr::Const(c) if c.is_one())
    }

    fn children(&self) -> Vec<&Expr> {
        match self {
            Expr::Const(_) | Expr::Var(_) | Expr::Param(_) => Vec::new(),
            Expr::Neg(a) | Expr::Func(_, a) | Expr::Pow(a, _) => alloc::vec![&**a],
            Expr::Apply { arg, .. } => alloc::vec![&**arg],
            Expr::Add(v) | Expr::Mul(v) => v.iter().collect(),
            Expr::Div(a, b) => alloc::vec![&**a, &**b],
        }
    }

    fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        for c in self.children() {
            c.walk(f);
        }
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.walk(&mut |e| {
            if let Expr::Var(v) = e {
                out.insert(*v);
            }
        });
        out
    }

    pub fn params(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.walk(&mut |e| {
            if let Expr::Param(p) = e {
                out.insert(String::from(&**p));
            }
        });
        out
    }

    pub fn opaque_functions(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.walk(&mut |e| {
            if let Expr::Apply { name, .. } = e {
                out.insert(String::from(&**name));
            }
        });
        out
    }

    /// Largest coordinate index referenced plus one (0 for coordinate-free trees).
    pub fn dimension_needed(&self) -> usize {
        self.vars().iter().map(|v| v.index() + 1).max().unwrap_or(0)
    }

    pub fn depends_on(&self, v: Var) -> bool {
        let mut hit = false;
        self.walk(&mut |e| {
            if let Expr::Var(w) = e {
                hit |= *w == v;
            }
        });
        hit
    }

    /// Replaces every occurrence of `v` by `by`. The result is not simplified.
    pub fn substitute(&self, v: Var, by: &Expr) -> Expr {
        self.map_leaves(&mut |e| match e {
            Expr::Var(w) if *w == v => Some(by.clone()),
            _ => None,
        })
    }

    /// Replaces bound parameters by their numeric values.
    pub fn substitute_params(&self, values: &BTreeMap<String, f64>) -> Expr {
        self.map_leaves(&mut |e| match e {
            Expr::Param(p) => values.get(&**p).map(|v| Expr::real(*v)),
            _ => None,
        })
    }

    fn map_leaves(&self, f: &mut impl FnMut(&Expr) -> Option<Expr>) -> Expr {
        if let Some(r) = f(self) {
            return r;
        }
        match self {
            Expr::Const(_) | Expr::Var(_) | Expr::Param(_) => self.clone(),
            Expr::Neg(a) => Expr::Neg(Box::new(a.map_leaves(f))),
            Expr::Func(g, a) => Expr::Func(*g, Box::new(a.map_leaves(f))),
            Expr::Pow(a, q) => Expr::Pow(Box::new(a.map_leaves(f)), *q),
            Expr::Apply { name, order, arg } => Expr::Apply {
                name: name.clone(),
                order: *order,
                arg: Box::new(arg.map_leaves(f)),
            },
            Expr::Add(v) => Expr::Add(v.iter().map(|e| e.map_leaves(f)).collect()),
            Expr::Mul(v) => Expr::Mul(v.iter().map(|e| e.map_leaves(f)).collect()),
            Expr::Div(a, b) => Expr::Div(Box::new(a.map_leaves(f)), Box::new(b.map_leaves(f))),
        }
    }

    /// Replaces opaque function applications by concrete bodies.
    /// Applications of functions absent from `bindings` are left in place.
    pub fn bind_functions(&self, bindings: &FunctionBindings) -> Expr {
        match self {
            Expr::Apply { name, order, arg } => {
                let arg = arg.bind_functions(bindings);
                match bindings.get(&**name) {
                    Some(b) => b.derivative(*order).substitute(b.formal, &arg),
                    None => Expr::Apply {
                        name: name.clone(),
                        order: *order,
                        arg: Box::new(arg),
                    },
                }
            }
            Expr::Const(_) | Expr::Var(_) | Expr::Param(_) => self.clone(),
            Expr::Neg(a) => Expr::Neg(Box::new(a.bind_functions(bindings))),
            Expr::Func(g, a) => Expr::Func(*g, Box::new(a.bind_functions(bindings))),
            Expr::Pow(a, q) => Expr::Pow(Box::new(a.bind_functions(bindings)), *q),
            Expr::Add(v) => Expr::Add(v.iter().map(|e| e.bind_functions(bindings)).collect()),
            Expr::Mul(v) => Expr::Mul(v.iter().map(|e| e.bind_functions(bindings)).collect()),
            Expr::Div(a, b) => Expr::Div(
                Box::new(a.bind_functions(bindings)),
                Box::new(b.bind_functions(bindings)),
            ),
        }
    }

    /// Terms of a canonical sum (a single-element slice for non-sums).
    pub fn terms(&self) -> &[Expr] {
        match self {
            Expr::Add(v) => v,
            other => core::slice::from_ref(other),
        }
    }
}

impl core::ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr::Add(alloc::vec![self, rhs])
    }
}

impl core::ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        Expr::Add(alloc::vec![self, Expr::Neg(Box::new(rhs))])
    }
}

impl core::ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::Mul(alloc::vec![self, rhs])
    }
}

impl core::ops::Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        Expr::Div(Box::new(self), Box::new(rhs))
    }
}

impl core::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::Neg(Box::new(self))
    }
}

/// Sum of an iterator of expressions (`0` when empty). Not simplified.
pub fn sum(items: impl IntoIterator<Item = Expr>) -> Expr {
    let v: Vec<Expr> = items.into_iter().collect();
    match v.len() {
        0 => Expr::zero(),
        1 => v.into_iter().next().unwrap(),
        _ => Expr::Add(v),
    }
}
