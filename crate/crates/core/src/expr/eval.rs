// SPDX-License-Identifier: Apache-2.0

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{Expr, Func, Var};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("ln of non-positive argument {0}")]
    LnDomain(f64),
    #[error("negative base {base} raised to non-integer power {exp}")]
    PowDomain { base: f64, exp: f64 },
    #[error("unbound parameter `{0}`")]
    UnboundParameter(String),
    #[error("unbound function `{0}`")]
    UnboundFunction(String),
    #[error("coordinate {0:?} outside dimension {1}")]
    CoordinateOutOfRange(Var, usize),
    #[error("non-finite intermediate value")]
    NonFinite,
}

/// An evaluation locus `u = (x, y)` in `TR^n` plus parameter values.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Point {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub params: BTreeMap<String, f64>,
}

impl Point {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Point {
        assert_eq!(x.len(), y.len(), "x and y must both have length n");
        Point {
            x,
            y,
            params: BTreeMap::new(),
        }
    }

    pub fn origin(n: usize) -> Point {
        Point::new(alloc::vec![0.0; n], alloc::vec![0.0; n])
    }

    pub fn with_param(mut self, name: &str, value: f64) -> Point {
        self.params.insert(name.to_string(), value);
        self
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn coord(&self, v: Var) -> Option<f64> {
        match v {
            Var::X(i) => self.x.get(i).copied(),
            Var::Y(i) => self.y.get(i).copied(),
        }
    }

    /// The `2n` coordinates in slot order `(x, y)`.
    pub fn slots(&self) -> Vec<f64> {
        self.x.iter().chain(self.y.iter()).copied().collect()
    }

    pub fn from_slots(slots: &[f64], params: BTreeMap<String, f64>) -> Point {
        let n = slots.len() / 2;
        Point {
            x: slots[..n].to_vec(),
            y: slots[n..].to_vec(),
            params,
        }
    }
}

/// Concrete body for an opaque unary function: `body` as a function of `formal`.
#[derive(Clone, Debug, PartialEq)]
pub struct FnBinding {
    pub formal: Var,
    pub body: Expr,
}

impl FnBinding {
    pub fn new(formal: Var, body: Expr) -> FnBinding {
        FnBinding { formal, body }
    }

    pub fn derivative(&self, order: u32) -> Expr {
        let mut d = self.body.clone();
        for _ in 0..order {
            d = d.diff(self.formal);
        }
        d
    }
}

pub type FunctionBindings = BTreeMap<String, FnBinding>;

fn check(v: f64) -> Result<f64, EvalError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EvalError::NonFinite)
    }
}

impl Expr {
    /// IEEE double evaluation. Domain violations are errors, never NaN.
    pub fn eval(&self, p: &Point) -> Result<f64, EvalError> {
        match self {
            Expr::Const(c) => Ok(c.to_f64()),
            Expr::Var(v) => p
                .coord(*v)
                .ok_or(EvalError::CoordinateOutOfRange(*v, p.dim())),
            Expr::Param(name) => p
                .params
                .get(&**name)
                .copied()
                .ok_or_else(|| EvalError::UnboundParameter(name.to_string())),
            Expr::Neg(a) => Ok(-a.eval(p)?),
            Expr::Add(ts) => {
                let mut s = 0.0;
                for t in ts {
                    s += t.eval(p)?;
                }
                check(s)
            }
            Expr::Mul(fs) => {
                let mut s = 1.0;
                for f in fs {
                    s *= f.eval(p)?;
                }
                check(s)
            }
            Expr::Div(a, b) => {
                let d = b.eval(p)?;
                if d == 0.0 {
                    return Err(EvalError::DivisionByZero);
                }
                check(a.eval(p)? / d)
            }
            Expr::Pow(b, q) => {
                let base = b.eval(p)?;
                let exp = q.to_f64();
                if base == 0.0 && q.is_negative() {
                    return Err(EvalError::DivisionByZero);
                }
                if base < 0.0 && !q.is_integer() {
                    // Odd roots of negatives are real.
                    if q.denom() % 2 == 1 {
                        let mag = libm::pow(-base, exp);
                        let sign = if q.numer() % 2 == 0 { 1.0 } else { -1.0 };
                        return check(sign * mag);
                    }
                    return Err(EvalError::PowDomain { base, exp });
                }
                if q.is_integer() {
                    check(powi(base, q.numer()))
                } else {
                    check(libm::pow(base, exp))
                }
            }
            Expr::Func(f, a) => {
                let v = a.eval(p)?;
                match f {
                    Func::Sin => Ok(libm::sin(v)),
                    Func::Cos => Ok(libm::cos(v)),
                    Func::Exp => check(libm::exp(v)),
                    Func::Ln => {
                        if v <= 0.0 {
                            Err(EvalError::LnDomain(v))
                        } else {
                            Ok(libm::log(v))
                        }
                    }
                    Func::Sqrt => {
                        if v < 0.0 {
                            Err(EvalError::PowDomain { base: v, exp: 0.5 })
                        } else {
                            Ok(libm::sqrt(v))
                        }
                    }
                }
            }
            Expr::Apply { name, .. } => Err(EvalError::UnboundFunction(name.to_string())),
        }
    }
}

fn powi(base: f64, k: i64) -> f64 {
    let mut e = k.unsigned_abs();
    let mut acc = 1.0;
    let mut b = base;
    while e > 0 {
        if e & 1 == 1 {
            acc *= b;
        }
        b *= b;
        e >>= 1;
    }
    if k < 0 {
        1.0 / acc
    } else {
        acc
    }
}
