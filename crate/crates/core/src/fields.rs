// SPDX-License-Identifier: Apache-2.0

//! Vector fields and one-forms on `TR^n` with expression coefficients.
//!
//! Components are stored in slot order: base (`∂/∂x_i`, `dx_i`) then fiber
//! (`∂/∂y_a`, `dy_a`).

use alloc::vec::Vec;

use crate::expr::{EvalError, Expr, Point, Var, ZeroTest};
use crate::sample::Sampler;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct VectorField {
    pub base: Vec<Expr>,
    pub fiber: Vec<Expr>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct OneForm {
    pub dx: Vec<Expr>,
    pub dy: Vec<Expr>,
}

fn zeros(n: usize) -> Vec<Expr> {
    (0..n).map(|_| Expr::zero()).collect()
}

fn simplify_all(v: &[Expr]) -> Vec<Expr> {
    v.iter().map(Expr::simplify).collect()
}

fn zero_tests(items: &[Expr], sampler: &Sampler) -> ZeroTest {
    ZeroTest::all(
        items
            .iter()
            .map(|e| crate::expr::zero_test(e, sampler).verdict),
    )
}

impl VectorField {
    pub fn new(base: Vec<Expr>, fiber: Vec<Expr>) -> VectorField {
        assert_eq!(
            base.len(),
            fiber.len(),
            "base and fiber must both have n components"
        );
        VectorField { base, fiber }
    }

    pub fn zero(n: usize) -> VectorField {
        VectorField::new(zeros(n), zeros(n))
    }

    /// `∂/∂x_i` (zero-based).
    pub fn d_x(n: usize, i: usize) -> VectorField {
        let mut v = VectorField::zero(n);
        v.base[i] = Expr::one();
        v
    }

    /// `∂/∂y_a` (zero-based).
    pub fn d_y(n: usize, a: usize) -> VectorField {
        let mut v = VectorField::zero(n);
        v.fiber[a] = Expr::one();
        v
    }

    /// The Liouville field `Σ y_a ∂/∂y_a`.
    pub fn liouville(n: usize) -> VectorField {
        VectorField::new(zeros(n), (0..n).map(Expr::y).collect())
    }

    pub fn from_slots(slots: Vec<Expr>) -> VectorField {
        let n = slots.len() / 2;
        let mut it = slots.into_iter();
        let base = it.by_ref().take(n).collect();
        VectorField::new(base, it.collect())
    }

    pub fn dim(&self) -> usize {
        self.base.len()
    }

    pub fn slots(&self) -> Vec<Expr> {
        self.base.iter().chain(&self.fiber).cloned().collect()
    }

    pub fn component(&self, v: Var) -> &Expr {
        match v {
            Var::X(i) => &self.base[i],
            Var::Y(a) => &self.fiber[a],
        }
    }

    pub fn simplify(&self) -> VectorField {
        VectorField::new(simplify_all(&self.base), simplify_all(&self.fiber))
    }

    /// The tangent structure: `J ∂/∂x_i = ∂/∂y_i`, `J ∂/∂y_a = 0`.
    pub fn tangent_structure(&self) -> VectorField {
        VectorField::new(zeros(self.dim()), self.base.clone())
    }

    /// Directional derivative `X(f)`, canonical.
    pub fn apply(&self, f: &Expr) -> Expr {
        let n = self.dim();
        let mut terms = Vec::new();
        for v in f.vars() {
            if v.index() >= n {
                continue;
            }
            let c = self.component(v);
            if c.is_zero_literal() {
                continue;
            }
            terms.push(c.clone() * f.diff(v));
        }
        crate::expr::sum(terms).simplify()
    }

    pub fn add(&self, o: &VectorField) -> VectorField {
        self.zip(o, |a, b| a.clone() + b.clone())
    }

    pub fn sub(&self, o: &VectorField) -> VectorField {
        self.zip(o, |a, b| a.clone() - b.clone())
    }

    pub fn scale(&self, c: &Expr) -> VectorField {
        self.map(|a| c.clone() * a.clone())
    }

    fn map(&self, f: impl Fn(&Expr) -> Expr) -> VectorField {
        VectorField::new(
            self.base.iter().map(|e| f(e).simplify()).collect(),
            self.fiber.iter().map(|e| f(e).simplify()).collect(),
        )
    }

    fn zip(&self, o: &VectorField, f: impl Fn(&Expr, &Expr) -> Expr) -> VectorField {
        assert_eq!(self.dim(), o.dim(), "dimension mismatch");
        VectorField::new(
            self.base
                .iter()
                .zip(&o.base)
                .map(|(a, b)| f(a, b).simplify())
                .collect(),
            self.fiber
                .iter()
                .zip(&o.fiber)
                .map(|(a, b)| f(a, b).simplify())
                .collect(),
        )
    }

    /// `[X, Y]^k = X(Y^k) − Y(X^k)`.
    pub fn lie_bracket(&self, o: &VectorField) -> VectorField {
        assert_eq!(self.dim(), o.dim(), "dimension mismatch");
        let comp = |a: &Expr, b: &Expr| (self.apply(b) - o.apply(a)).simplify();
        VectorField::new(
            self.base
                .iter()
                .zip(&o.base)
                .map(|(a, b)| comp(a, b))
                .collect(),
            self.fiber
                .iter()
                .zip(&o.fiber)
                .map(|(a, b)| comp(a, b))
                .collect(),
        )
    }

    pub fn is_zero(&self, sampler: &Sampler) -> ZeroTest {
        zero_tests(&self.slots(), sampler)
    }

    pub fn is_zero_literal(&self) -> bool {
        self.base
            .iter()
            .chain(&self.fiber)
            .all(Expr::is_zero_literal)
    }

    pub fn eval(&self, p: &Point) -> Result<Vec<f64>, EvalError> {
        self.base
            .iter()
            .chain(&self.fiber)
            .map(|e| e.eval(p))
            .collect()
    }

    pub fn bind(&self, f: impl Fn(&Expr) -> Expr) -> VectorField {
        VectorField::new(
            self.base.iter().map(&f).collect(),
            self.fiber.iter().map(&f).collect(),
        )
    }
}

impl OneForm {
    pub fn new(dx: Vec<Expr>, dy: Vec<Expr>) -> OneForm {
        assert_eq!(dx.len(), dy.len(), "dx and dy must both have n components");
        OneForm { dx, dy }
    }

    pub fn zero(n: usize) -> OneForm {
        OneForm::new(zeros(n), zeros(n))
    }

    pub fn dx_basis(n: usize, i: usize) -> OneForm {
        let mut f = OneForm::zero(n);
        f.dx[i] = Expr::one();
        f
    }

    pub fn dy_basis(n: usize, a: usize) -> OneForm {
        let mut f = OneForm::zero(n);
        f.dy[a] = Expr::one();
        f
    }

    pub fn from_slots(slots: Vec<Expr>) -> OneForm {
        let n = slots.len() / 2;
        let mut it = slots.into_iter();
        let dx = it.by_ref().take(n).collect();
        OneForm::new(dx, it.collect())
    }

    pub fn dim(&self) -> usize {
        self.dx.len()
    }

    pub fn slots(&self) -> Vec<Expr> {
        self.dx.iter().chain(&self.dy).cloned().collect()
    }

    pub fn slot(&self, k: usize) -> &Expr {
        let n = self.dim();
        if k < n {
            &self.dx[k]
        } else {
            &self.dy[k - n]
        }
    }

    /// `df` in the coordinate coframe.
    pub fn differential(f: &Expr, n: usize) -> OneForm {
        OneForm::new(
            (0..n).map(|i| f.diff(Var::X(i))).collect(),
            (0..n).map(|a| f.diff(Var::Y(a))).collect(),
        )
    }

    /// `α(X)`, canonical.
    pub fn eval_on(&self, x: &VectorField) -> Expr {
        assert_eq!(self.dim(), x.dim(), "dimension mismatch");
        let mut terms = Vec::new();
        for (a, b) in self
            .dx
            .iter()
            .zip(&x.base)
            .chain(self.dy.iter().zip(&x.fiber))
        {
            if a.is_zero_literal() || b.is_zero_literal() {
                continue;
            }
            terms.push(a.clone() * b.clone());
        }
        crate::expr::sum(terms).simplify()
    }

    pub fn simplify(&self) -> OneForm {
        OneForm::new(simplify_all(&self.dx), simplify_all(&self.dy))
    }

    pub fn add(&self, o: &OneForm) -> OneForm {
        self.zip(o, |a, b| a.clone() + b.clone())
    }

    pub fn sub(&self, o: &OneForm) -> OneForm {
        self.zip(o, |a, b| a.clone() - b.clone())
    }

    pub fn neg(&self) -> OneForm {
        self.scale(&Expr::int(-1))
    }

    pub fn scale(&self, c: &Expr) -> OneForm {
        OneForm::new(
            self.dx
                .iter()
                .map(|e| (c.clone() * e.clone()).simplify())
                .collect(),
            self.dy
                .iter()
                .map(|e| (c.clone() * e.clone()).simplify())
                .collect(),
        )
    }

    fn zip(&self, o: &OneForm, f: impl Fn(&Expr, &Expr) -> Expr) -> OneForm {
        assert_eq!(self.dim(), o.dim(), "dimension mismatch");
        OneForm::new(
            self.dx
                .iter()
                .zip(&o.dx)
                .map(|(a, b)| f(a, b).simplify())
                .collect(),
            self.dy
                .iter()
                .zip(&o.dy)
                .map(|(a, b)| f(a, b).simplify())
                .collect(),
        )
    }

    pub fn is_zero(&self, sampler: &Sampler) -> ZeroTest {
        zero_tests(&self.slots(), sampler)
    }

    pub fn is_zero_literal(&self) -> bool {
        self.dx.iter().chain(&self.dy).all(Expr::is_zero_literal)
    }

    pub fn eval(&self, p: &Point) -> Result<Vec<f64>, EvalError> {
        self.dx.iter().chain(&self.dy).map(|e| e.eval(p)).collect()
    }

    pub fn bind(&self, f: impl Fn(&Expr) -> Expr) -> OneForm {
        OneForm::new(
            self.dx.iter().map(&f).collect(),
            self.dy.iter().map(&f).collect(),
        )
    }
}
