// SPDX-License-Identifier: Apache-2.0

//! The big tangent bundle `T ⊕ T*` of `TR^n`: pairing, Courant bracket,
//! almost Dirac structures and pointwise checks on them.

use alloc::vec::Vec;

use crate::expr::{EvalError, Expr, Number, Point, Rational};
use crate::fields::{OneForm, VectorField};
use crate::forms::{differential, interior_product, lie_derivative, TwoForm};
use crate::linalg::{dot, norm, orthonormal_basis, projection_residual, Matrix, Svd};
use crate::sample::Sampler;

/// A section `(X, α)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Section {
    pub x: VectorField,
    pub alpha: OneForm,
}

impl Section {
    pub fn new(x: VectorField, alpha: OneForm) -> Section {
        assert_eq!(x.dim(), alpha.dim(), "dimension mismatch");
        Section { x, alpha }
    }

    pub fn vector(x: VectorField) -> Section {
        let n = x.dim();
        Section::new(x, OneForm::zero(n))
    }

    pub fn covector(alpha: OneForm) -> Section {
        let n = alpha.dim();
        Section::new(VectorField::zero(n), alpha)
    }

    pub fn dim(&self) -> usize {
        self.x.dim()
    }

    pub fn add(&self, o: &Section) -> Section {
        Section::new(self.x.add(&o.x), self.alpha.add(&o.alpha))
    }

    pub fn simplify(&self) -> Section {
        Section::new(self.x.simplify(), self.alpha.simplify())
    }

    pub fn is_zero_literal(&self) -> bool {
        self.x.is_zero_literal() && self.alpha.is_zero_literal()
    }

    /// Components `(X slots, α slots)`, length `4n`.
    pub fn slots(&self) -> Vec<Expr> {
        let mut v = self.x.slots();
        v.extend(self.alpha.slots());
        v
    }

    pub fn eval(&self, p: &Point) -> Result<Vec<f64>, EvalError> {
        let mut v = self.x.eval(p)?;
        v.extend(self.alpha.eval(p)?);
        Ok(v)
    }

    pub fn bind(&self, f: impl Fn(&Expr) -> Expr) -> Section {
        Section::new(self.x.bind(&f), self.alpha.bind(&f))
    }
}

/// `⟪(X, α), (Y, β)⟫ = β(X) + α(Y)`.
pub fn pairing(a: &Section, b: &Section) -> Expr {
    (b.alpha.eval_on(&a.x) + a.alpha.eval_on(&b.x)).simplify()
}

fn half() -> Expr {
    Expr::Const(Number::Rational(Rational::HALF))
}

/// `⟦(X, α), (Y, β)⟧ = ([X, Y], L_X β − L_Y α + ½ d(α(Y) − β(X)))`.
pub fn courant_bracket(a: &Section, b: &Section) -> Section {
    let n = a.dim();
    let x = a.x.lie_bracket(&b.x);
    let skew = (a.alpha.eval_on(&b.x) - b.alpha.eval_on(&a.x)).simplify();
    let alpha = lie_derivative(&a.x, &b.alpha)
        .sub(&lie_derivative(&b.x, &a.alpha))
        .add(&differential(&skew, n).scale(&half()));
    Section::new(x, alpha)
}

/// Coefficient of `d(⟪⟦a1,a2⟧,a3⟫ + c.p.)` in the Jacobiator identity for the
/// pairing without a ½ factor.
pub const JACOBI_FACTOR: (i64, i64) = (1, 6);

/// Both sides of `⟦⟦a1,a2⟧,a3⟧ + c.p. = (1/6) d(⟪⟦a1,a2⟧,a3⟫ + c.p.)`
/// evaluated at `p`, each a `4n` vector.
pub fn jacobi_anomaly(
    a1: &Section,
    a2: &Section,
    a3: &Section,
    p: &Point,
) -> Result<(Vec<f64>, Vec<f64>), EvalError> {
    let (lhs, rhs) = jacobi_sides(a1, a2, a3);
    Ok((lhs.eval(p)?, rhs.eval(p)?))
}

/// Both sides of the anomaly identity as sections, for evaluation at many points.
pub fn jacobi_sides(a1: &Section, a2: &Section, a3: &Section) -> (Section, Section) {
    let (lhs, t) = jacobiator(a1, a2, a3);
    let n = a1.dim();
    let rhs = Section::covector(
        differential(&t, n).scale(&Expr::rational(JACOBI_FACTOR.0, JACOBI_FACTOR.1)),
    );
    (lhs, rhs)
}

/// `(⟦⟦a1,a2⟧,a3⟧ + c.p., ⟪⟦a1,a2⟧,a3⟫ + c.p.)`.
pub fn jacobiator(a1: &Section, a2: &Section, a3: &Section) -> (Section, Expr) {
    let triples = [(a1, a2, a3), (a2, a3, a1), (a3, a1, a2)];
    let mut lhs = Section::vector(VectorField::zero(a1.dim()));
    let mut t = Vec::new();
    for (u, v, w) in triples {
        let uv = courant_bracket(u, v);
        lhs = lhs.add(&courant_bracket(&uv, w));
        t.push(pairing(&uv, w));
    }
    (lhs, crate::expr::sum(t).simplify())
}

/// How an [`AlmostDirac`] was built.
#[derive(Clone, Debug, PartialEq)]
pub struct Provenance {
    /// Counts of `D` and user-supplied `D°` generators, if built from a distribution.
    pub distribution: Option<(usize, usize)>,
    /// `D°` generators fall short of rank `2n − k`; the complement is solved
    /// numerically at each point.
    pub numeric_annihilator: bool,
    /// Gauge two-forms applied, in order.
    pub gauges: Vec<TwoForm>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlmostDirac {
    pub n: usize,
    pub generators: Vec<Section>,
    pub provenance: Provenance,
    /// Singular loci; pointwise checks refuse points on them.
    pub singular: Vec<Expr>,
    /// Vector parts of the `D` generators, kept for the numeric annihilator.
    distribution: Vec<VectorField>,
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum DiracError {
    #[error("D generators have rank {rank} < {expected} at a sampled point")]
    RankDeficientDistribution {
        rank: usize,
        expected: usize,
        witness: Point,
    },
    #[error("annihilator generator {ann} does not vanish on D generator {gen}: value {value}")]
    AnnihilatorMismatch {
        ann: usize,
        gen: usize,
        value: f64,
        witness: Point,
    },
    #[error("annihilator generators have rank {rank} > {bound}")]
    AnnihilatorTooLarge {
        rank: usize,
        bound: usize,
        witness: Point,
    },
    #[error("no admissible sample points")]
    NoSamplePoints,
    #[error("point lies on a singular locus")]
    SingularPoint,
    #[error("L has rank {rank} < {expected} at the point")]
    RankDeficient { rank: usize, expected: usize },
    #[error("vector is not in the characteristic distribution (residual {residual})")]
    NotCharacteristic { residual: f64 },
    #[error("leaf form is not well-defined: {a} vs {b}")]
    IllDefinedLeafForm { a: f64, b: f64 },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Pointwise check tolerances.
pub const ANNIHILATOR_TOL: f64 = 1e-9;
pub const RANK_TOL: f64 = 1e-9;
const VALIDATION_POINTS: usize = 20;

impl AlmostDirac {
    pub fn from_generators(n: usize, generators: Vec<Section>) -> AlmostDirac {
        AlmostDirac {
            n,
            generators,
            provenance: Provenance {
                distribution: None,
                numeric_annihilator: false,
                gauges: Vec::new(),
            },
            singular: Vec::new(),
            distribution: Vec::new(),
        }
    }

    pub fn with_singular(mut self, loci: impl IntoIterator<Item = Expr>) -> Self {
        self.singular.extend(loci);
        self
    }

    fn check_point(&self, p: &Point) -> Result<(), DiracError> {
        for ex in &self.singular {
            match ex.eval(p) {
                Ok(v) if v != 0.0 => {}
                _ => return Err(DiracError::SingularPoint),
            }
        }
        Ok(())
    }

    /// Evaluated generators as rows of length `4n`, completed by the numeric
    /// annihilator when the supplied one is deficient.
    pub fn rows_at(&self, p: &Point) -> Result<Vec<Vec<f64>>, DiracError> {
        self.check_point(p)?;
        let mut rows = Vec::with_capacity(self.generators.len());
        for g in &self.generators {
            rows.push(g.eval(p)?);
        }
        if self.provenance.numeric_annihilator {
            let m = 2 * self.n;
            let d_rows: Vec<Vec<f64>> = self
                .distribution
                .iter()
                .map(|x| x.eval(p))
                .collect::<Result<_, _>>()?;
            // Annihilator of D_p = nullspace of the k × 2n matrix of D rows.
            for eta in numeric_annihilator(&d_rows, m) {
                let mut r = alloc::vec![0.0; m];
                r.extend(eta);
                rows.push(r);
            }
        }
        Ok(rows)
    }

    pub fn gram_at(&self, p: &Point) -> Result<Vec<Vec<f64>>, DiracError> {
        let rows = self.rows_at(p)?;
        let m = 2 * self.n;
        Ok(rows
            .iter()
            .map(|a| {
                rows.iter()
                    .map(|b| dot(&b[m..], &a[..m]) + dot(&a[m..], &b[..m]))
                    .collect()
            })
            .collect())
    }
}

fn numeric_annihilator(d_rows: &[Vec<f64>], m: usize) -> Vec<Vec<f64>> {
    if d_rows.is_empty() {
        return (0..m)
            .map(|k| {
                let mut e = alloc::vec![0.0; m];
                e[k] = 1.0;
                e
            })
            .collect();
    }
    Svd::new(&Matrix::from_rows(d_rows)).nullspace(RANK_TOL)
}

/// `L_D = D ⊕ D°`, validated at sampled points of `sampler`.
pub fn from_distribution(
    d_gens: &[VectorField],
    ann_gens: &[OneForm],
    sampler: &Sampler,
) -> Result<AlmostDirac, DiracError> {
    let n = sampler.n;
    let m = 2 * n;
    let k = d_gens.len();
    let points = sampler.points(VALIDATION_POINTS);
    if points.is_empty() {
        return Err(DiracError::NoSamplePoints);
    }
    let mut deficient = false;
    for p in &points {
        let d_rows: Vec<Vec<f64>> = d_gens.iter().map(|x| x.eval(p)).collect::<Result<_, _>>()?;
        let ann_rows: Vec<Vec<f64>> = ann_gens
            .iter()
            .map(|a| a.eval(p))
            .collect::<Result<_, _>>()?;
        let rank = if k == 0 {
            0
        } else {
            Matrix::from_rows(&d_rows).rank(RANK_TOL)
        };
        if rank < k {
            return Err(DiracError::RankDeficientDistribution {
                rank,
                expected: k,
                witness: p.clone(),
            });
        }
        for (j, a) in ann_rows.iter().enumerate() {
            for (i, x) in d_rows.iter().enumerate() {
                let v = dot(a, x);
                let scale = norm(a) * norm(x);
                if v.abs() > ANNIHILATOR_TOL * scale.max(1.0) {
                    return Err(DiracError::AnnihilatorMismatch {
                        ann: j,
                        gen: i,
                        value: v,
                        witness: p.clone(),
                    });
                }
            }
        }
        let ann_rank = if ann_rows.is_empty() {
            0
        } else {
            Matrix::from_rows(&ann_rows).rank(RANK_TOL)
        };
        if ann_rank > m - k {
            return Err(DiracError::AnnihilatorTooLarge {
                rank: ann_rank,
                bound: m - k,
                witness: p.clone(),
            });
        }
        deficient |= ann_rank < m - k;
    }
    let mut generators: Vec<Section> = d_gens.iter().cloned().map(Section::vector).collect();
    if !deficient {
        generators.extend(ann_gens.iter().cloned().map(Section::covector));
    }
    Ok(AlmostDirac {
        n,
        generators,
        provenance: Provenance {
            distribution: Some((k, ann_gens.len())),
            numeric_annihilator: deficient,
            gauges: Vec::new(),
        },
        singular: sampler.exclusions.clone(),
        distribution: d_gens.to_vec(),
    })
}

/// `(X, α) ↦ (X, α + i_X ω)` on every generator; `ω` in the coordinate basis.
pub fn gauge_transform(l: &AlmostDirac, w: &TwoForm) -> AlmostDirac {
    let mut out = l.clone();
    out.generators = l
        .generators
        .iter()
        .map(|g| Section::new(g.x.clone(), g.alpha.add(&interior_product(&g.x, w))))
        .collect();
    out.provenance.gauges.push(w.clone());
    out
}

pub fn is_isotropic_at(l: &AlmostDirac, p: &Point, tol: f64) -> Result<bool, DiracError> {
    let rows = l.rows_at(p)?;
    let scale = rows.iter().map(|r| dot(r, r)).fold(0.0, f64::max);
    let g = l.gram_at(p)?;
    let worst = g.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(worst <= tol * scale.max(f64::MIN_POSITIVE))
}

pub fn is_maximal_at(l: &AlmostDirac, p: &Point, tol: f64) -> Result<bool, DiracError> {
    let rows = l.rows_at(p)?;
    if rows.is_empty() {
        return Ok(l.n == 0);
    }
    Ok(Matrix::from_rows(&rows).rank(tol) == 2 * l.n)
}

/// Courant brackets of all generator pairs, computed once for repeated probing.
#[derive(Clone, Debug)]
pub struct InvolutivityProbe<'a> {
    l: &'a AlmostDirac,
    brackets: Vec<Section>,
}

impl<'a> InvolutivityProbe<'a> {
    pub fn new(l: &'a AlmostDirac) -> Self {
        let g = &l.generators;
        let mut brackets = Vec::new();
        for i in 0..g.len() {
            for j in i + 1..g.len() {
                let b = courant_bracket(&g[i], &g[j]);
                if !b.is_zero_literal() {
                    brackets.push(b);
                }
            }
        }
        InvolutivityProbe { l, brackets }
    }

    pub fn brackets(&self) -> &[Section] {
        &self.brackets
    }

    /// Largest norm of a bracket's component orthogonal to `L_p`.
    pub fn residual_at(&self, p: &Point) -> Result<f64, DiracError> {
        let rows = self.l.rows_at(p)?;
        let rank = if rows.is_empty() {
            0
        } else {
            Matrix::from_rows(&rows).rank(RANK_TOL)
        };
        if rank < 2 * self.l.n {
            return Err(DiracError::RankDeficient {
                rank,
                expected: 2 * self.l.n,
            });
        }
        let basis = orthonormal_basis(&rows, RANK_TOL);
        let mut worst = 0.0f64;
        for b in &self.brackets {
            worst = worst.max(projection_residual(&basis, &b.eval(p)?));
        }
        Ok(worst)
    }
}

pub fn involutivity_residual(l: &AlmostDirac, p: &Point) -> Result<f64, DiracError> {
    InvolutivityProbe::new(l).residual_at(p)
}

fn split_rows(rows: &[Vec<f64>], m: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    (
        rows.iter().map(|r| r[..m].to_vec()).collect(),
        rows.iter().map(|r| r[m..].to_vec()).collect(),
    )
}

/// Orthonormal basis of `K_p = L_p ∩ (T ⊕ 0)`.
pub fn kernel_at(l: &AlmostDirac, p: &Point) -> Result<Vec<Vec<f64>>, DiracError> {
    let rows = l.rows_at(p)?;
    let m = 2 * l.n;
    let (xs, alphas) = split_rows(&rows, m);
    if rows.is_empty() {
        return Ok(Vec::new());
    }
    // Combinations c with Σ c_k α_k = 0: nullspace of the m × r matrix αᵀ.
    let at = Matrix::from_rows(&alphas).transpose();
    let combos = if at.max_abs() == 0.0 {
        (0..rows.len())
            .map(|k| {
                let mut e = alloc::vec![0.0; rows.len()];
                e[k] = 1.0;
                e
            })
            .collect()
    } else {
        Svd::new(&at).nullspace(RANK_TOL)
    };
    let xt = Matrix::from_rows(&xs).transpose();
    let vectors: Vec<Vec<f64>> = combos.iter().map(|c| xt.mul_vec(c)).collect();
    Ok(orthonormal_basis(&vectors, RANK_TOL))
}

/// Tolerance for membership of a tangent vector in `Pr_T(L_p)`.
pub const LEAF_TOL: f64 = 1e-9;

/// `ω_L(X, Y) = α(Y)` for any `α` with `(X, α) ∈ L_p`.
pub fn leaf_two_form_at(
    l: &AlmostDirac,
    p: &Point,
    xv: &[f64],
    yv: &[f64],
) -> Result<f64, DiracError> {
    let rows = l.rows_at(p)?;
    let m = 2 * l.n;
    let (xs, alphas) = split_rows(&rows, m);
    let xt = Matrix::from_rows(&xs).transpose();
    let at = Matrix::from_rows(&alphas).transpose();
    let svd = Svd::new(&xt);
    let scale = xt.max_abs().max(1.0);
    for v in [xv, yv] {
        let c = svd.solve(v, RANK_TOL);
        let res = xt
            .mul_vec(&c)
            .iter()
            .zip(v)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>();
        let res = libm::sqrt(res);
        if res > LEAF_TOL * scale * norm(v).max(1.0) {
            return Err(DiracError::NotCharacteristic { residual: res });
        }
    }
    let c = svd.solve(xv, RANK_TOL);
    let a = dot(&at.mul_vec(&c), yv);
    // Any other preimage differs by a nullspace direction of Xᵀ.
    let mut b = a;
    if let Some(z) = svd.nullspace(RANK_TOL).first() {
        let c2: Vec<f64> = c.iter().zip(z).map(|(ci, zi)| ci + zi).collect();
        b = dot(&at.mul_vec(&c2), yv);
    }
    if (a - b).abs() > LEAF_TOL * (1.0 + a.abs()) {
        return Err(DiracError::IllDefinedLeafForm { a, b });
    }
    Ok(a)
}
