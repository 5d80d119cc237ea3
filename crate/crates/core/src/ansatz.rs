// SPDX-License-Identifier: Apache-2.0

//! Linear search for pairs `(H, ω)` with `dH − i_S ω ∈ D°` over finite
//! dictionaries, by collocation and nullspace extraction.

use alloc::vec::Vec;

use crate::expr::{Expr, Point, ZeroTest};
use crate::fields::{OneForm, VectorField};
use crate::forms::{interior_product, Basis, TwoForm};
use crate::linalg::{dot, norm, projection_residual, Matrix, Svd};
use crate::motion::{hamiltonian_certificate, residual, Distribution, MotionError, MotionReport};
use crate::sample::Sampler;
use crate::spray::SemiSpray;

pub const RANK_TOL: f64 = 1e-8;
pub const VERIFY_TOL: f64 = 1e-9;
/// Candidates whose `‖dH‖` stays below this on the samples are trivial.
pub const TRIVIAL_TOL: f64 = 1e-10;
pub const VERIFY_POINTS: usize = 50;
const MAX_DENOMINATOR: i64 = 64;

#[derive(Clone, Debug)]
pub struct Ansatz {
    pub h_dictionary: Vec<Expr>,
    pub omega_dictionary: Vec<TwoForm>,
    pub degree: usize,
    /// Collocation points; raised to three times the unknown count if smaller.
    pub points: usize,
    pub sampler: Sampler,
}

/// Monomials in `x_1..x_n, y_1..y_n` of total degree `1..=d`, by degree then
/// lexicographically in slot order.
pub fn monomials(n: usize, d: usize) -> Vec<Expr> {
    let m = 2 * n;
    let mut out = Vec::new();
    for deg in 1..=d {
        let mut exps = alloc::vec![0usize; m];
        push_exponents(&mut exps, 0, deg, &mut out);
    }
    out
}

fn push_exponents(e: &mut [usize], slot: usize, left: usize, out: &mut Vec<Expr>) {
    let m = e.len();
    if slot == m - 1 {
        e[slot] = left;
        let n = m / 2;
        let factors: Vec<Expr> = e
            .iter()
            .enumerate()
            .filter(|(_, k)| **k > 0)
            .map(|(s, k)| {
                let v = if s < n { Expr::x(s) } else { Expr::y(s - n) };
                v.powi(*k as i64)
            })
            .collect();
        out.push(
            factors
                .into_iter()
                .fold(Expr::one(), |a, b| a * b)
                .simplify(),
        );
        e[slot] = 0;
        return;
    }
    for k in (0..=left).rev() {
        e[slot] = k;
        push_exponents(e, slot + 1, left - k, out);
    }
    e[slot] = 0;
}

/// One unit-coefficient form `θ_k ∧ θ_l` per coordinate pair.
pub fn constant_two_forms(n: usize) -> Vec<TwoForm> {
    let m = 2 * n;
    let mut out = Vec::new();
    for k in 0..m {
        for l in k + 1..m {
            out.push(TwoForm::zero(n, Basis::Coordinate).with_term(k, l, Expr::one()));
        }
    }
    out
}

impl Ansatz {
    pub fn new(n: usize, degree: usize, sampler: Sampler) -> Ansatz {
        Ansatz {
            h_dictionary: monomials(n, degree),
            omega_dictionary: constant_two_forms(n),
            degree,
            points: 0,
            sampler,
        }
    }

    pub fn unknowns(&self) -> usize {
        self.h_dictionary.len() + self.omega_dictionary.len()
    }

    pub fn collocation_count(&self) -> usize {
        self.points.max(3 * self.unknowns())
    }
}

#[derive(Clone, Debug)]
pub struct ConstraintSystem {
    pub matrix: Matrix,
    pub points: Vec<Point>,
    /// `∂φ_k/∂u_s` at each point, one row per (point, slot), for the
    /// trivial-solution filter.
    pub dh_rows: Matrix,
    pub h_count: usize,
}

fn coordinate(s: &SemiSpray, w: &TwoForm) -> TwoForm {
    match w.basis {
        Basis::Coordinate => w.clone(),
        Basis::Berwald => w.to_coordinate(&crate::spray::berwald_frame(s)),
    }
}

/// Rows `(d(Σ c_k φ_k) − i_S(Σ w_l ω_l))(e_j)` at collocation points.
pub fn assemble(
    s: &SemiSpray,
    d_gens: &[VectorField],
    a: &Ansatz,
) -> Result<ConstraintSystem, MotionError> {
    crate::motion::check_membership(s, d_gens, &a.sampler)?;
    let sv = s.vector_field();
    let n = s.n;
    let h_count = a.h_dictionary.len();
    // Entry expressions per generator, per unknown.
    let mut entries: Vec<Vec<Expr>> = Vec::with_capacity(d_gens.len());
    for e in d_gens {
        let mut row: Vec<Expr> = a.h_dictionary.iter().map(|phi| e.apply(phi)).collect();
        for w in &a.omega_dictionary {
            let iw = interior_product(&sv, &coordinate(s, w));
            row.push((-iw.eval_on(e)).simplify());
        }
        entries.push(row);
    }
    let grads: Vec<Vec<Expr>> = a
        .h_dictionary
        .iter()
        .map(|phi| OneForm::differential(phi, n).slots())
        .collect();
    // One consistent binding for every opaque function in the system.
    let mut names = alloc::collections::BTreeSet::new();
    for x in entries.iter().flatten().chain(grads.iter().flatten()) {
        names.extend(x.opaque_functions());
    }
    let mut rng = a.sampler.rng();
    let bindings = a.sampler.complete_bindings(&names, &mut rng);
    let bind =
        |r: &Vec<Expr>| -> Vec<Expr> { r.iter().map(|x| x.bind_functions(&bindings)).collect() };
    let entries: Vec<Vec<Expr>> = entries.iter().map(bind).collect();
    let grads: Vec<Vec<Expr>> = grads.iter().map(bind).collect();
    let want = a.collocation_count();
    let mut rows = Vec::with_capacity(want * d_gens.len());
    let mut dh_rows = Vec::with_capacity(want);
    let mut points = Vec::with_capacity(want);
    let budget = want.saturating_mul(20).max(1);
    for _ in 0..budget {
        if points.len() == want {
            break;
        }
        let Some(p) = a.sampler.points_from(&mut rng, 1).pop() else {
            break;
        };
        let block: Result<Vec<Vec<f64>>, _> = entries
            .iter()
            .map(|r| r.iter().map(|x| x.eval(&p)).collect())
            .collect();
        // Slot-major gradient samples: row (slot), column k.
        let dh: Result<Vec<Vec<f64>>, _> = (0..2 * n)
            .map(|slot| grads.iter().map(|g| g[slot].eval(&p)).collect())
            .collect();
        let (Ok(mut block), Ok(dh)) = (block, dh) else {
            continue;
        };
        if block.iter().chain(&dh).flatten().any(|v| !v.is_finite()) {
            continue;
        }
        let scale = block.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale > 0.0 {
            for v in block.iter_mut().flatten() {
                *v /= scale;
            }
        }
        rows.extend(block);
        dh_rows.extend(dh);
        points.push(p);
    }
    if points.is_empty() {
        return Err(MotionError::NoSamplePoints);
    }
    let unknowns = a.unknowns();
    let matrix = if rows.is_empty() {
        Matrix::zeros(0, unknowns)
    } else {
        Matrix::from_rows(&rows)
    };
    let dh_rows = if h_count == 0 {
        Matrix::zeros(dh_rows.len(), 0)
    } else {
        Matrix::from_rows(&dh_rows)
    };
    Ok(ConstraintSystem {
        matrix,
        points,
        dh_rows,
        h_count,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct CandidateSolution {
    /// Unit-norm coefficient vector split over the two dictionaries.
    pub h_coeffs: Vec<f64>,
    pub omega_coeffs: Vec<f64>,
    pub h: Expr,
    pub omega: TwoForm,
    /// Coefficients were recognised as small rationals (up to scale).
    pub exact: bool,
    pub symbolic: ZeroTest,
    pub numeric_residual: f64,
    pub report: Option<MotionReport>,
}

impl CandidateSolution {
    pub fn coeffs(&self) -> Vec<f64> {
        self.h_coeffs
            .iter()
            .chain(&self.omega_coeffs)
            .copied()
            .collect()
    }

    pub fn verified(&self) -> bool {
        self.symbolic.is_proven_zero() || self.numeric_residual <= VERIFY_TOL
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    pub sigma: Vec<f64>,
    /// Orthonormal nullspace basis of the constraint matrix.
    pub nullspace: Vec<Vec<f64>>,
    pub candidates: Vec<CandidateSolution>,
    /// Nullspace directions with `dH ≡ 0` on the samples.
    pub trivial: usize,
}

impl Solution {
    /// Distance of the normalized `known` coefficient vector from the nullspace.
    pub fn projection_residual(&self, known: &[f64]) -> f64 {
        let nv = norm(known);
        let unit: Vec<f64> = known.iter().map(|v| v / nv).collect();
        projection_residual(&self.nullspace, &unit)
    }
}

/// Rescales so the largest entry is ±1 and snaps to rationals when every
/// entry is one; returns the scaled vector and whether it snapped.
fn snap(v: &[f64]) -> (Vec<(i64, i64)>, bool) {
    let peak = v
        .iter()
        .fold(0.0f64, |m, x| if x.abs() > m.abs() { *x } else { m });
    let mut out = Vec::with_capacity(v.len());
    let mut exact = peak != 0.0;
    for x in v {
        let y = x / peak;
        let hit = (1..=MAX_DENOMINATOR).find_map(|den| {
            let num = libm::round(y * den as f64);
            ((y * den as f64 - num).abs() < 1e-9 * den as f64).then_some((num as i64, den))
        });
        match hit {
            Some(r) => out.push(r),
            None => {
                exact = false;
                out.push((0, 1));
            }
        }
    }
    (out, exact)
}

fn combination(dict_h: &[Expr], dict_w: &[TwoForm], n: usize, coeffs: &[Expr]) -> (Expr, TwoForm) {
    let (ch, cw) = coeffs.split_at(dict_h.len());
    let h = crate::expr::sum(
        dict_h
            .iter()
            .zip(ch)
            .filter(|(_, c)| !c.is_zero_literal())
            .map(|(p, c)| c.clone() * p.clone()),
    )
    .simplify();
    let mut w = TwoForm::zero(n, Basis::Coordinate);
    for (f, c) in dict_w.iter().zip(cw) {
        if c.is_zero_literal() {
            continue;
        }
        w = w.add(&f.scale(c));
    }
    (h, w)
}

/// Reduced echelon basis of `span(vectors)`, rows normalized to unit length.
fn echelon_basis(vectors: &[Vec<f64>]) -> Vec<Vec<f64>> {
    if vectors.is_empty() {
        return Vec::new();
    }
    let (r, pivots) = Matrix::from_rows(vectors).rref(1e-9);
    (0..pivots.len())
        .map(|i| {
            let row = r.row(i).to_vec();
            let nr = norm(&row);
            row.iter().map(|v| v / nr).collect()
        })
        .collect()
}

/// Nullspace candidates, with the trivial (`dH ≡ 0`) directions split off.
pub fn solve(sys: &ConstraintSystem, rank_tol: f64) -> Solution {
    let svd = Svd::new(&sys.matrix);
    let nullspace = svd.nullspace(rank_tol);
    let hc = sys.h_count;
    // dH samples of each nullspace direction: rows = points, one column per direction.
    let mut informative = Vec::new();
    let mut trivial = nullspace.len();
    if !nullspace.is_empty() && hc > 0 {
        // dH samples of each nullspace direction, one column per direction.
        let mut nh = Matrix::zeros(hc, nullspace.len());
        for (j, v) in nullspace.iter().enumerate() {
            for k in 0..hc {
                nh[(k, j)] = v[k];
            }
        }
        let e = sys.dh_rows.mul(&nh);
        let esvd = Svd::new(&e);
        let cut = TRIVIAL_TOL.max(rank_tol * esvd.sigma_max());
        let mut dirs = Vec::new();
        for (j, s) in esvd.sigma.iter().enumerate() {
            if *s > cut {
                let c = esvd.v.column(j);
                let mut x = alloc::vec![0.0; sys.matrix.cols];
                for (b, cb) in nullspace.iter().zip(&c) {
                    for (xi, bi) in x.iter_mut().zip(b) {
                        *xi += cb * bi;
                    }
                }
                dirs.push(x);
            }
        }
        trivial -= dirs.len();
        informative = echelon_basis(&dirs);
    }
    let candidates = informative
        .into_iter()
        .map(|v| {
            let (h, w) = v.split_at(hc);
            CandidateSolution {
                h_coeffs: h.to_vec(),
                omega_coeffs: w.to_vec(),
                h: Expr::zero(),
                omega: TwoForm::zero(0, Basis::Coordinate),
                exact: false,
                symbolic: ZeroTest::Unknown,
                numeric_residual: f64::INFINITY,
                report: None,
            }
        })
        .collect();
    Solution {
        sigma: svd.sigma,
        nullspace,
        candidates,
        trivial,
    }
}

/// Builds the candidate's `(H, ω)`, checks it symbolically on `D` and
/// numerically at fresh points.
pub fn verify(
    s: &SemiSpray,
    d_gens: &[VectorField],
    a: &Ansatz,
    c: &mut CandidateSolution,
) -> Result<(), MotionError> {
    let n = s.n;
    let coeffs = c.coeffs();
    let (snapped, exact) = snap(&coeffs);
    let exprs: Vec<Expr> = if exact {
        snapped
            .iter()
            .map(|(p, q)| Expr::rational(*p, *q))
            .collect()
    } else {
        coeffs.iter().map(|v| Expr::real(*v)).collect()
    };
    let (h, w) = combination(&a.h_dictionary, &a.omega_dictionary, n, &exprs);
    c.h = h;
    c.omega = w;
    c.exact = exact;
    let fresh = a
        .sampler
        .clone()
        .with_seed(a.sampler.seed ^ 0x9e37_79b9_7f4a_7c15);
    let report = residual(s, &c.omega, &c.h, d_gens, &fresh)?;
    c.symbolic = if exact {
        report.residual_verdict()
    } else {
        ZeroTest::Unknown
    };
    // Numeric residual with the unit-norm coefficients.
    let unit: Vec<Expr> = coeffs.iter().map(|v| Expr::real(*v)).collect();
    let (hu, wu) = combination(&a.h_dictionary, &a.omega_dictionary, n, &unit);
    let rho = OneForm::differential(&hu, n).sub(&interior_product(&s.vector_field(), &wu));
    let comps: Vec<Expr> = d_gens.iter().map(|e| rho.eval_on(e)).collect();
    let mut rng = fresh.rng();
    let comps: Vec<Expr> = comps
        .iter()
        .map(|x| fresh.concretize(x, &mut rng))
        .collect();
    let mut worst = 0.0f64;
    let mut evaluated = 0;
    for p in fresh.points_from(&mut rng, VERIFY_POINTS) {
        if let Ok(vals) = comps
            .iter()
            .map(|x| x.eval(&p))
            .collect::<Result<Vec<f64>, _>>()
        {
            evaluated += 1;
            worst = vals.iter().fold(worst, |m, v| m.max(v.abs()));
        }
    }
    c.numeric_residual = if evaluated == 0 { f64::INFINITY } else { worst };
    c.report = Some(report);
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchResult {
    pub solution: Solution,
    pub rows: usize,
    pub collocation_points: usize,
    /// Candidates that failed verification.
    pub rejected: usize,
}

/// `assemble → solve → verify`, keeping verified candidates tagged with
/// their Hamiltonian certificate.
pub fn search(
    s: &SemiSpray,
    d: &Distribution,
    ann_gens: &[OneForm],
    a: &Ansatz,
) -> Result<SearchResult, MotionError> {
    let d_gens = d.generators(s);
    let sys = assemble(s, &d_gens, a)?;
    let mut solution = solve(&sys, RANK_TOL);
    let mut kept = Vec::new();
    let mut rejected = 0;
    for mut c in core::mem::take(&mut solution.candidates) {
        verify(s, &d_gens, a, &mut c)?;
        if !c.verified() {
            rejected += 1;
            continue;
        }
        let cert_sampler = a.sampler.clone();
        c.report = Some(hamiltonian_certificate(
            s,
            &c.omega,
            d,
            ann_gens,
            &c.h,
            &cert_sampler,
        )?);
        kept.push(c);
    }
    solution.candidates = kept;
    Ok(SearchResult {
        rows: sys.matrix.rows,
        collocation_points: sys.points.len(),
        solution,
        rejected,
    })
}

/// Coefficient vector of `(H, ω)` over the ansatz dictionaries, for
/// dictionaries whose elements are distinct monomials and unit forms.
pub fn known_vector(
    a: &Ansatz,
    h_terms: &[(usize, f64)],
    omega_terms: &[(usize, f64)],
) -> Vec<f64> {
    let mut v = alloc::vec![0.0; a.unknowns()];
    for (k, c) in h_terms {
        v[*k] = *c;
    }
    for (l, c) in omega_terms {
        v[a.h_dictionary.len() + l] = *c;
    }
    v
}

/// Cosine of the angle between two coefficient vectors.
pub fn alignment(a: &[f64], b: &[f64]) -> f64 {
    dot(a, b) / (norm(a) * norm(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monomial_counts() {
        assert_eq!(monomials(1, 2).len(), 5);
        assert_eq!(monomials(2, 2).len(), 14);
        assert_eq!(constant_two_forms(2).len(), 6);
    }

    #[test]
    fn constant_dictionary_gives_zero_rows() {
        let s = SemiSpray::new(alloc::vec![Expr::zero(), Expr::y(1).powi(2)]);
        let mut a = Ansatz::new(2, 1, s.sampler(1));
        a.h_dictionary = alloc::vec![Expr::one()];
        a.omega_dictionary.clear();
        let d = crate::spray::berwald_frame(&s).horizontal;
        let sys = assemble(&s, &d, &a).unwrap();
        assert_eq!(sys.matrix.max_abs(), 0.0);
        let sol = solve(&sys, RANK_TOL);
        assert!(sol.candidates.is_empty());
        assert_eq!(sol.trivial, 1);
    }

    #[test]
    fn snapping() {
        let (r, ok) = snap(&[0.5, -0.25, 1.0 / 3.0]);
        assert!(ok);
        assert_eq!(r, alloc::vec![(1, 1), (-1, 2), (2, 3)]);
        assert!(!snap(&[1.0, core::f64::consts::PI]).1);
    }
}
