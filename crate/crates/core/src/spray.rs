// SPDX-License-Identifier: Apache-2.0

//! Semi-sprays, their nonlinear connection, Berwald frame and curvature.

use alloc::vec::Vec;

use crate::expr::{zero_test, Expr, Rational, Var, ZeroTest};
use crate::fields::{OneForm, VectorField};
use crate::sample::Sampler;

/// `S = Σ y_i ∂/∂x_i − 2 Σ G^a(x, y) ∂/∂y_a` on `TR^n`.
#[derive(Clone, Debug, PartialEq)]
pub struct SemiSpray {
    pub n: usize,
    pub g: Vec<Expr>,
    /// Expressions whose zero set is excluded from the domain.
    pub singular: Vec<Expr>,
}

impl SemiSpray {
    pub fn new(g: Vec<Expr>) -> SemiSpray {
        SemiSpray {
            n: g.len(),
            g,
            singular: Vec::new(),
        }
    }

    pub fn zero(n: usize) -> SemiSpray {
        SemiSpray::new((0..n).map(|_| Expr::zero()).collect())
    }

    pub fn with_singular(mut self, loci: impl IntoIterator<Item = Expr>) -> Self {
        self.singular.extend(loci);
        self
    }

    pub fn vector_field(&self) -> VectorField {
        VectorField::new(
            (0..self.n).map(Expr::y).collect(),
            self.g
                .iter()
                .map(|g| (Expr::int(-2) * g.clone()).simplify())
                .collect(),
        )
    }

    /// `S(f)`.
    pub fn apply(&self, f: &Expr) -> Expr {
        self.vector_field().apply(f)
    }

    /// A sampler over this spray's domain; unbound parameters are drawn per point.
    pub fn sampler(&self, seed: u64) -> Sampler {
        let mut s = Sampler::new(self.n, seed).with_exclusions(self.singular.iter().cloned());
        for e in self.g.iter().chain(&self.singular) {
            s = s.free_params_of(e);
        }
        s
    }
}

/// `JX − 𝕮` fiber components; a semi-spray makes all of them vanish.
pub fn semispray_residual(x: &VectorField) -> Vec<Expr> {
    let jx = x.tangent_structure();
    jx.fiber
        .iter()
        .enumerate()
        .map(|(a, c)| (c.clone() - Expr::y(a)).simplify())
        .collect()
}

pub fn is_semispray(x: &VectorField, sampler: &Sampler) -> ZeroTest {
    ZeroTest::all(
        semispray_residual(x)
            .iter()
            .map(|e| zero_test(e, sampler).verdict),
    )
}

/// Euler residuals `Σ y_i ∂G^a/∂y_i − 2G^a`.
pub fn euler_residual(s: &SemiSpray) -> Vec<Expr> {
    s.g.iter()
        .map(|g| {
            let mut terms: Vec<Expr> = (0..s.n).map(|i| Expr::y(i) * g.diff(Var::Y(i))).collect();
            terms.push(Expr::int(-2) * g.clone());
            crate::expr::sum(terms).simplify()
        })
        .collect()
}

pub fn is_spray(s: &SemiSpray, sampler: &Sampler) -> ZeroTest {
    ZeroTest::all(
        euler_residual(s)
            .iter()
            .map(|e| zero_test(e, sampler).verdict),
    )
}

/// `N[a][i] = ∂G^a/∂y_i`.
pub fn connection_coefficients(s: &SemiSpray) -> Vec<Vec<Expr>> {
    s.g.iter()
        .map(|g| (0..s.n).map(|i| g.diff(Var::Y(i))).collect())
        .collect()
}

/// `G^a = ½ Σ y_i N^a_i`.
pub fn spray_from_connection(nc: &[Vec<Expr>]) -> SemiSpray {
    let g = nc
        .iter()
        .map(|row| {
            let terms = row.iter().enumerate().map(|(i, c)| Expr::y(i) * c.clone());
            (Expr::Const(crate::expr::Number::Rational(Rational::HALF)) * crate::expr::sum(terms))
                .simplify()
        })
        .collect();
    SemiSpray::new(g)
}

/// Adapted frame `δ/δx_i, ∂/∂y_a` and dual coframe `dx_i, δy_a`.
#[derive(Clone, Debug, PartialEq)]
pub struct BerwaldFrame {
    pub n: usize,
    pub connection: Vec<Vec<Expr>>,
    pub horizontal: Vec<VectorField>,
    pub vertical: Vec<VectorField>,
    pub dx: Vec<OneForm>,
    pub dely: Vec<OneForm>,
}

impl BerwaldFrame {
    pub fn from_connection(nc: Vec<Vec<Expr>>) -> BerwaldFrame {
        let n = nc.len();
        let horizontal = (0..n)
            .map(|i| {
                let mut v = VectorField::d_x(n, i);
                for (a, row) in nc.iter().enumerate() {
                    v.fiber[a] = (-row[i].clone()).simplify();
                }
                v
            })
            .collect();
        let dely = (0..n)
            .map(|a| {
                let mut f = OneForm::dy_basis(n, a);
                f.dx = nc[a].clone();
                f
            })
            .collect();
        BerwaldFrame {
            n,
            horizontal,
            vertical: (0..n).map(|a| VectorField::d_y(n, a)).collect(),
            dx: (0..n).map(|i| OneForm::dx_basis(n, i)).collect(),
            dely,
            connection: nc,
        }
    }

    /// Frame vectors in slot order `(δ/δx_1..δ/δx_n, ∂/∂y_1..∂/∂y_n)`.
    pub fn frame(&self) -> Vec<VectorField> {
        self.horizontal
            .iter()
            .chain(&self.vertical)
            .cloned()
            .collect()
    }

    /// Coframe in slot order `(dx_1..dx_n, δy_1..δy_n)`.
    pub fn coframe(&self) -> Vec<OneForm> {
        self.dx.iter().chain(&self.dely).cloned().collect()
    }

    /// `M[k][l] = θ_k(e_l)`; the identity for a valid frame.
    pub fn duality_matrix(&self) -> Vec<Vec<Expr>> {
        let frame = self.frame();
        self.coframe()
            .iter()
            .map(|th| frame.iter().map(|e| th.eval_on(e)).collect())
            .collect()
    }

    pub fn duality_check(&self, sampler: &Sampler) -> ZeroTest {
        let m = self.duality_matrix();
        let mut out = Vec::new();
        for (k, row) in m.iter().enumerate() {
            for (l, e) in row.iter().enumerate() {
                let target = if k == l { Expr::one() } else { Expr::zero() };
                out.push(zero_test(&(e.clone() - target), sampler).verdict);
            }
        }
        ZeroTest::all(out)
    }

    /// `(dx_i(X), δy_a(X))`.
    pub fn decompose(&self, x: &VectorField) -> (Vec<Expr>, Vec<Expr>) {
        (
            self.dx.iter().map(|f| f.eval_on(x)).collect(),
            self.dely.iter().map(|f| f.eval_on(x)).collect(),
        )
    }

    /// `Σ h_i δ/δx_i + Σ v_a ∂/∂y_a`.
    pub fn recompose(&self, h: &[Expr], v: &[Expr]) -> VectorField {
        let mut out = VectorField::zero(self.n);
        for (c, e) in h.iter().zip(&self.horizontal) {
            out = out.add(&e.scale(c));
        }
        for (c, e) in v.iter().zip(&self.vertical) {
            out = out.add(&e.scale(c));
        }
        out
    }
}

pub fn berwald_frame(s: &SemiSpray) -> BerwaldFrame {
    BerwaldFrame::from_connection(connection_coefficients(s))
}

pub fn decompose(x: &VectorField, f: &BerwaldFrame) -> (Vec<Expr>, Vec<Expr>) {
    f.decompose(x)
}

/// `R[a][i][j] = δ_j N^a_i − δ_i N^a_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct CurvatureTensor {
    pub n: usize,
    pub r: Vec<Vec<Vec<Expr>>>,
}

impl CurvatureTensor {
    pub fn components(&self) -> impl Iterator<Item = &Expr> {
        self.r
            .iter()
            .flat_map(|m| m.iter().flat_map(|row| row.iter()))
    }

    /// `R^a_ij + R^a_ji` for every index triple.
    pub fn antisymmetry_residual(&self) -> Vec<Expr> {
        let n = self.n;
        let mut out = Vec::new();
        for a in 0..n {
            for i in 0..n {
                for j in 0..n {
                    out.push((self.r[a][i][j].clone() + self.r[a][j][i].clone()).simplify());
                }
            }
        }
        out
    }
}

pub fn curvature_from_frame(f: &BerwaldFrame) -> CurvatureTensor {
    let n = f.n;
    let mut r = Vec::with_capacity(n);
    for a in 0..n {
        let mut m = Vec::with_capacity(n);
        for i in 0..n {
            let mut row = Vec::with_capacity(n);
            for j in 0..n {
                if i == j {
                    row.push(Expr::zero());
                    continue;
                }
                let e = f.horizontal[j].apply(&f.connection[a][i])
                    - f.horizontal[i].apply(&f.connection[a][j]);
                row.push(e.simplify());
            }
            m.push(row);
        }
        r.push(m);
    }
    CurvatureTensor { n, r }
}

pub fn curvature(s: &SemiSpray) -> CurvatureTensor {
    curvature_from_frame(&berwald_frame(s))
}

/// Residuals of `[δ/δx_i, δ/δx_j] = Σ R^a_ij ∂/∂y_a`: base components of the
/// bracket and differences of its fiber components from `R`.
pub fn bracket_cross_check(f: &BerwaldFrame, r: &CurvatureTensor) -> Vec<Expr> {
    let n = f.n;
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let b = f.horizontal[i].lie_bracket(&f.horizontal[j]);
            out.extend(b.base.iter().cloned());
            for a in 0..n {
                out.push((b.fiber[a].clone() - r.r[a][i][j].clone()).simplify());
            }
        }
    }
    out
}

pub fn is_flat(s: &SemiSpray, sampler: &Sampler) -> ZeroTest {
    let r = curvature(s);
    ZeroTest::all(r.components().map(|e| zero_test(e, sampler).verdict))
}
