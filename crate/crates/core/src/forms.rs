// SPDX-License-Identifier: Apache-2.0

//! Two- and three-forms, exterior derivative, interior product and Lie
//! derivative of one-forms.

use alloc::vec::Vec;

use crate::expr::{zero_test, EvalError, Expr, Point, Var, ZeroTest};
use crate::fields::{OneForm, VectorField};
use crate::sample::Sampler;
use crate::spray::BerwaldFrame;

/// Coframe a form's components refer to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Basis {
    /// `dx_i, dy_a`.
    Coordinate,
    /// `dx_i, δy_a` of a Berwald frame.
    Berwald,
}

fn pair_index(m: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < m);
    // Row-major strictly upper triangle.
    i * (2 * m - i - 1) / 2 + (j - i - 1)
}

/// `ω = Σ_{k<l} c_kl θ_k ∧ θ_l` over the `2n` coframe slots.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TwoForm {
    pub n: usize,
    pub basis: Basis,
    coeffs: Vec<Expr>,
}

impl TwoForm {
    pub fn zero(n: usize, basis: Basis) -> TwoForm {
        let m = 2 * n;
        TwoForm {
            n,
            basis,
            coeffs: (0..m * m.saturating_sub(1) / 2)
                .map(|_| Expr::zero())
                .collect(),
        }
    }

    /// Slot-indexed coefficient of `θ_k ∧ θ_l`, antisymmetric in `(k, l)`.
    pub fn get(&self, k: usize, l: usize) -> Expr {
        use core::cmp::Ordering::*;
        match k.cmp(&l) {
            Equal => Expr::zero(),
            Less => self.coeffs[pair_index(2 * self.n, k, l)].clone(),
            Greater => (-self.coeffs[pair_index(2 * self.n, l, k)].clone()).simplify(),
        }
    }

    /// Adds `c θ_k ∧ θ_l`.
    pub fn add_term(&mut self, k: usize, l: usize, c: Expr) {
        use core::cmp::Ordering::*;
        let m = 2 * self.n;
        match k.cmp(&l) {
            Equal => {}
            Less => {
                let e = &mut self.coeffs[pair_index(m, k, l)];
                *e = (e.clone() + c).simplify();
            }
            Greater => {
                let e = &mut self.coeffs[pair_index(m, l, k)];
                *e = (e.clone() - c).simplify();
            }
        }
    }

    pub fn with_term(mut self, k: usize, l: usize, c: Expr) -> Self {
        self.add_term(k, l, c);
        self
    }

    /// Stored `(k, l, c_kl)` with `k < l`.
    pub fn terms(&self) -> impl Iterator<Item = (usize, usize, &Expr)> {
        let m = 2 * self.n;
        (0..m)
            .flat_map(move |k| (k + 1..m).map(move |l| (k, l)))
            .map(move |(k, l)| (k, l, &self.coeffs[pair_index(m, k, l)]))
    }

    pub fn is_zero_literal(&self) -> bool {
        self.coeffs.iter().all(Expr::is_zero_literal)
    }

    pub fn add(&self, o: &TwoForm) -> TwoForm {
        assert_eq!(
            (self.n, self.basis),
            (o.n, o.basis),
            "incompatible two-forms"
        );
        TwoForm {
            n: self.n,
            basis: self.basis,
            coeffs: self
                .coeffs
                .iter()
                .zip(&o.coeffs)
                .map(|(a, b)| (a.clone() + b.clone()).simplify())
                .collect(),
        }
    }

    pub fn scale(&self, c: &Expr) -> TwoForm {
        TwoForm {
            n: self.n,
            basis: self.basis,
            coeffs: self
                .coeffs
                .iter()
                .map(|a| (c.clone() * a.clone()).simplify())
                .collect(),
        }
    }

    pub fn neg(&self) -> TwoForm {
        self.scale(&Expr::int(-1))
    }

    pub fn bind(&self, f: impl Fn(&Expr) -> Expr) -> TwoForm {
        TwoForm {
            n: self.n,
            basis: self.basis,
            coeffs: self.coeffs.iter().map(f).collect(),
        }
    }

    /// Coordinate-basis form. Berwald-basis forms are expanded with `δy_a = dy_a + N^a_i dx_i`.
    pub fn to_coordinate(&self, frame: &BerwaldFrame) -> TwoForm {
        if self.basis == Basis::Coordinate {
            return self.clone();
        }
        assert_eq!(frame.n, self.n, "frame dimension mismatch");
        let coframe = frame.coframe();
        let mut out = TwoForm::zero(self.n, Basis::Coordinate);
        for (k, l, c) in self.terms() {
            if c.is_zero_literal() {
                continue;
            }
            out = out.add(&wedge(&coframe[k], &coframe[l]).scale(c));
        }
        out
    }

    fn require_coordinate(&self) {
        assert_eq!(
            self.basis,
            Basis::Coordinate,
            "convert Berwald-basis forms with to_coordinate first"
        );
    }

    /// `ω(X, Y)` for a coordinate-basis form.
    pub fn eval_on(&self, x: &VectorField, y: &VectorField) -> Expr {
        self.require_coordinate();
        let xs = x.slots();
        let ys = y.slots();
        let mut terms = Vec::new();
        for (k, l, c) in self.terms() {
            if c.is_zero_literal() {
                continue;
            }
            terms.push(c.clone() * (xs[k].clone() * ys[l].clone() - xs[l].clone() * ys[k].clone()));
        }
        crate::expr::sum(terms).simplify()
    }

    /// Numeric `2n × 2n` antisymmetric matrix at `p`.
    pub fn eval_matrix(&self, p: &Point) -> Result<Vec<Vec<f64>>, EvalError> {
        self.require_coordinate();
        let m = 2 * self.n;
        let mut out = alloc::vec![alloc::vec![0.0; m]; m];
        for (k, l, c) in self.terms() {
            if c.is_zero_literal() {
                continue;
            }
            let v = c.eval(p)?;
            out[k][l] = v;
            out[l][k] = -v;
        }
        Ok(out)
    }
}

/// `α ∧ β` in the coordinate basis.
pub fn wedge(a: &OneForm, b: &OneForm) -> TwoForm {
    let n = a.dim();
    let (sa, sb) = (a.slots(), b.slots());
    let mut out = TwoForm::zero(n, Basis::Coordinate);
    for k in 0..2 * n {
        for l in k + 1..2 * n {
            let c = sa[k].clone() * sb[l].clone() - sa[l].clone() * sb[k].clone();
            let c = c.simplify();
            if !c.is_zero_literal() {
                out.add_term(k, l, c);
            }
        }
    }
    out
}

/// Coefficients of `Σ_{i<j<k} c_ijk θ_i ∧ θ_j ∧ θ_k` in the coordinate basis.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ThreeForm {
    pub n: usize,
    pub coeffs: Vec<((usize, usize, usize), Expr)>,
}

impl ThreeForm {
    pub fn is_zero_literal(&self) -> bool {
        self.coeffs.iter().all(|(_, c)| c.is_zero_literal())
    }

    pub fn is_zero(&self, sampler: &Sampler) -> ZeroTest {
        ZeroTest::all(
            self.coeffs
                .iter()
                .map(|(_, c)| zero_test(c, sampler).verdict),
        )
    }
}

/// `(dα)_kl = ∂_k α_l − ∂_l α_k`.
pub fn exterior_derivative_1(a: &OneForm) -> TwoForm {
    let n = a.dim();
    let m = 2 * n;
    let mut out = TwoForm::zero(n, Basis::Coordinate);
    for k in 0..m {
        for l in k + 1..m {
            let c = a.slot(l).diff(Var::from_slot(k, n)) - a.slot(k).diff(Var::from_slot(l, n));
            let c = c.simplify();
            if !c.is_zero_literal() {
                out.add_term(k, l, c);
            }
        }
    }
    out
}

/// `(dω)_ijk = ∂_i ω_jk − ∂_j ω_ik + ∂_k ω_ij` for a coordinate-basis form.
pub fn exterior_derivative_2(w: &TwoForm) -> ThreeForm {
    w.require_coordinate();
    let n = w.n;
    let m = 2 * n;
    let mut coeffs = Vec::new();
    for i in 0..m {
        for j in i + 1..m {
            for k in j + 1..m {
                let (vi, vj, vk) = (
                    Var::from_slot(i, n),
                    Var::from_slot(j, n),
                    Var::from_slot(k, n),
                );
                let c = w.get(j, k).diff(vi) - w.get(i, k).diff(vj) + w.get(i, j).diff(vk);
                coeffs.push(((i, j, k), c.simplify()));
            }
        }
    }
    ThreeForm { n, coeffs }
}

/// `d` of a function as a one-form.
pub fn differential(f: &Expr, n: usize) -> OneForm {
    OneForm::differential(f, n)
}

/// `(i_X ω)_l = Σ_k X^k ω_kl`.
pub fn interior_product(x: &VectorField, w: &TwoForm) -> OneForm {
    w.require_coordinate();
    let n = w.n;
    assert_eq!(x.dim(), n, "dimension mismatch");
    let xs = x.slots();
    let mut slots = Vec::with_capacity(2 * n);
    for l in 0..2 * n {
        let mut terms = Vec::new();
        for (k, xk) in xs.iter().enumerate() {
            if xk.is_zero_literal() || k == l {
                continue;
            }
            let c = w.get(k, l);
            if !c.is_zero_literal() {
                terms.push(xk.clone() * c);
            }
        }
        slots.push(crate::expr::sum(terms).simplify());
    }
    OneForm::from_slots(slots)
}

/// Cartan formula `L_X α = i_X dα + d(α(X))`.
pub fn lie_derivative(x: &VectorField, a: &OneForm) -> OneForm {
    let n = a.dim();
    interior_product(x, &exterior_derivative_1(a)).add(&differential(&a.eval_on(x), n))
}

pub fn is_closed(w: &TwoForm, sampler: &Sampler) -> ZeroTest {
    exterior_derivative_2(w).is_zero(sampler)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spray::{berwald_frame, SemiSpray};

    #[test]
    fn pair_indexing_is_dense() {
        let m = 6;
        let mut seen = alloc::vec![false; m * (m - 1) / 2];
        for i in 0..m {
            for j in i + 1..m {
                seen[pair_index(m, i, j)] = true;
            }
        }
        assert!(seen.iter().all(|s| *s));
    }

    #[test]
    fn d_of_berwald_coframe() {
        let s = SemiSpray::new(alloc::vec![Expr::zero(), Expr::y(1).powi(2)]);
        let f = berwald_frame(&s);
        let d = exterior_derivative_1(&f.dely[1]);
        // d(dy2 + 2 y2 dx2) = 2 dy2 ∧ dx2 = -2 dx2 ∧ dy2
        assert_eq!(d.get(3, 1), Expr::int(2));
        assert_eq!(d.get(1, 3), Expr::int(-2));
        assert_eq!(
            d.terms().filter(|(_, _, c)| !c.is_zero_literal()).count(),
            1
        );
    }

    #[test]
    fn interior_product_of_area_form() {
        let w = TwoForm::zero(2, Basis::Coordinate).with_term(0, 1, Expr::one());
        let s = SemiSpray::new(alloc::vec![Expr::zero(), Expr::y(1).powi(2)]).vector_field();
        let i = interior_product(&s, &w);
        assert_eq!(i.dx[0], (-Expr::y(1)).simplify());
        assert_eq!(i.dx[1], Expr::y(0));
    }

    #[test]
    fn lie_derivative_of_exact_form() {
        let f = Expr::x(0) * Expr::y(0);
        let l = lie_derivative(&VectorField::d_x(1, 0), &differential(&f, 1));
        assert_eq!(l, OneForm::dy_basis(1, 0));
    }

    #[test]
    fn berwald_form_expands() {
        let s = SemiSpray::new(alloc::vec![Expr::zero(), Expr::y(1).powi(2)]);
        let f = berwald_frame(&s);
        // dx1 ∧ δy2 = dx1 ∧ dy2 + 2 y2 dx1 ∧ dx2
        let w = TwoForm::zero(2, Basis::Berwald)
            .with_term(0, 3, Expr::one())
            .to_coordinate(&f);
        assert_eq!(w.get(0, 3), Expr::one());
        assert_eq!(w.get(0, 1), (Expr::int(2) * Expr::y(1)).simplify());
    }
}
