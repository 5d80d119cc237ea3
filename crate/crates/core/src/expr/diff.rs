// SPDX-License-Identifier: Apache-2.0

use alloc::boxed::Box;
use alloc::vec::Vec;

use super::{Expr, Func, Number, Rational, Var};

fn raw_diff(e: &Expr, v: Var) -> Expr {
    match e {
        Expr::Const(_) | Expr::Param(_) => Expr::zero(),
        Expr::Var(w) => {
            if *w == v {
                Expr::one()
            } else {
                Expr::zero()
            }
        }
        Expr::Neg(a) => Expr::Neg(Box::new(raw_diff(a, v))),
        Expr::Add(ts) => Expr::Add(ts.iter().map(|t| raw_diff(t, v)).collect()),
        Expr::Mul(fs) => {
            let mut terms = Vec::with_capacity(fs.len());
            for (i, f) in fs.iter().enumerate() {
                if !f.depends_on(v) {
                    continue;
                }
                let mut prod: Vec<Expr> = fs
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, g)| g.clone())
                    .collect();
                prod.push(raw_diff(f, v));
                terms.push(Expr::Mul(prod));
            }
            super::sum(terms)
        }
        Expr::Div(a, b) => {
            // a'/b - a b'/b^2
            let da = raw_diff(a, v);
            let db = raw_diff(b, v);
            Expr::Div(Box::new(da), b.clone())
                - Expr::Mul(alloc::vec![
                    (**a).clone(),
                    db,
                    Expr::Pow(b.clone(), Rational::integer(-2)),
                ])
        }
        Expr::Pow(b, q) => {
            let qm1 = q.checked_sub(Rational::ONE).unwrap_or(*q);
            Expr::Mul(alloc::vec![
                Expr::Const(Number::Rational(*q)),
                Expr::Pow(b.clone(), qm1),
                raw_diff(b, v),
            ])
        }
        Expr::Func(f, a) => {
            let da = raw_diff(a, v);
            let outer = match f {
                Func::Sin => Expr::Func(Func::Cos, a.clone()),
                Func::Cos => Expr::Neg(Box::new(Expr::Func(Func::Sin, a.clone()))),
                Func::Exp => Expr::Func(Func::Exp, a.clone()),
                Func::Ln => Expr::Pow(a.clone(), Rational::MINUS_ONE),
                Func::Sqrt => Expr::Mul(alloc::vec![
                    Expr::Const(Number::Rational(Rational::HALF)),
                    Expr::Pow(a.clone(), Rational::new(-1, 2).unwrap()),
                ]),
            };
            Expr::Mul(alloc::vec![outer, da])
        }
        Expr::Apply { name, order, arg } => Expr::Mul(alloc::vec![
            Expr::Apply {
                name: name.clone(),
                order: order + 1,
                arg: arg.clone(),
            },
            raw_diff(arg, v),
        ]),
    }
}

impl Expr {
    /// Partial derivative with respect to a coordinate, in canonical form.
    ///
    /// Every node kind has a rule (the function set is closed), so this cannot fail.
    pub fn diff(&self, v: Var) -> Expr {
        if !self.depends_on(v) {
            return Expr::zero();
        }
        raw_diff(self, v).simplify()
    }
}
