// SPDX-License-Identifier: Apache-2.0

//! Constants of motion and Hamiltonian certificates: the residual
//! `ρ = dH − i_S ω` on a distribution containing the semi-spray, and the
//! integrability and closedness checks that upgrade it to a Dirac structure.

use alloc::vec::Vec;

use crate::dirac::{from_distribution, gauge_transform, AlmostDirac, DiracError, Section};
use crate::expr::{zero_test, EvalError, Expr, Point, ZeroReport, ZeroTest};
use crate::fields::{OneForm, VectorField};
use crate::forms::{differential, exterior_derivative_2, interior_product, Basis, TwoForm};
use crate::linalg::{norm, orthonormal_basis, projection_residual, Matrix};
use crate::sample::Sampler;
use crate::spray::{berwald_frame, is_flat, is_spray, SemiSpray};

/// Relative tolerance for `S ∈ span(D)` at sampled points.
pub const MEMBERSHIP_TOL: f64 = 1e-9;
/// A bracket leaving `span(D)` by more than this (relative) refutes integrability.
pub const NON_INTEGRABLE_TOL: f64 = 1e-6;
const CHECK_POINTS: usize = 20;

/// The distribution `D` that must contain the semi-spray.
#[derive(Clone, Debug, PartialEq)]
pub enum Distribution {
    /// The Berwald horizontal distribution, spanned by `δ/δx_i`.
    Horizontal,
    Generators(Vec<VectorField>),
}

impl Distribution {
    pub fn generators(&self, s: &SemiSpray) -> Vec<VectorField> {
        match self {
            Distribution::Horizontal => berwald_frame(s).horizontal,
            Distribution::Generators(g) => g.clone(),
        }
    }

    /// The horizontal distribution when `S` is provably a spray.
    pub fn default_for(s: &SemiSpray, sampler: &Sampler) -> Result<Distribution, MotionError> {
        match is_spray(s, sampler) {
            ZeroTest::ProvenZero => Ok(Distribution::Horizontal),
            v => Err(MotionError::DistributionRequired(v)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum MotionError {
    #[error("S is not in span(D) at a sampled point (residual {residual})")]
    NotInDistribution { residual: f64, witness: Point },
    #[error("no admissible sample points")]
    NoSamplePoints,
    #[error("S is not provably a spray ({0}); a distribution containing S is required")]
    DistributionRequired(ZeroTest),
    #[error(transparent)]
    Dirac(#[from] DiracError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Yes,
    No,
    Unknown,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Yes => "yes",
            Verdict::No => "no",
            Verdict::Unknown => "unknown",
        }
    }
}

impl core::fmt::Display for Verdict {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianCertificate {
    /// Verdict on the integrability obstruction of `D` (zero means integrable).
    pub integrable: ZeroTest,
    /// Largest relative distance of a generator bracket from `span(D)`.
    pub integrability_residual: f64,
    /// Verdict on `dω`.
    pub closed: ZeroTest,
    pub overall: Verdict,
    /// Generators of `L_ω = τ_ω(D ⊕ D°)`.
    pub structure: AlmostDirac,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MotionReport {
    /// `ρ = dH − i_S ω` in the coordinate coframe.
    pub residual_form: OneForm,
    /// `ρ(e_j)` for each generator `e_j` of `D`.
    pub components: Vec<Expr>,
    pub verdicts: Vec<ZeroReport>,
    pub numeric_max: f64,
    pub samples: usize,
    pub s_of_h: Expr,
    pub s_of_h_verdict: ZeroReport,
    /// `dH ≡ 0` and `ω ≡ 0`: the residual vanishes for no informative reason.
    pub trivial: bool,
    pub certificate: Option<HamiltonianCertificate>,
}

impl MotionReport {
    pub fn residual_verdict(&self) -> ZeroTest {
        ZeroTest::all(self.verdicts.iter().map(|r| r.verdict))
    }

    pub fn summary(&self) -> &'static str {
        match (&self.certificate, self.residual_verdict()) {
            (Some(c), _) if c.overall == Verdict::Yes => "hamiltonian",
            (_, ZeroTest::ProvenZero) => "constant_of_motion_only",
            (_, ZeroTest::ProvenNonzero) => "residual_nonzero",
            _ => "undetermined",
        }
    }
}

fn coordinate_form(s: &SemiSpray, w: &TwoForm) -> TwoForm {
    match w.basis {
        Basis::Coordinate => w.clone(),
        Basis::Berwald => w.to_coordinate(&berwald_frame(s)),
    }
}

/// Relative distance of `v` from the span of `rows`.
fn distance_from_span(rows: &[Vec<f64>], v: &[f64]) -> f64 {
    let basis = orthonormal_basis(rows, 1e-12);
    projection_residual(&basis, v) / norm(v).max(1.0)
}

fn eval_rows(fields: &[VectorField], p: &Point) -> Result<Vec<Vec<f64>>, EvalError> {
    fields.iter().map(|f| f.eval(p)).collect()
}

/// Checks `S ∈ span(D)` at the sampler's points.
pub fn check_membership(
    s: &SemiSpray,
    d_gens: &[VectorField],
    sampler: &Sampler,
) -> Result<Vec<Point>, MotionError> {
    let points = sampler.points(CHECK_POINTS);
    if points.is_empty() {
        return Err(MotionError::NoSamplePoints);
    }
    let sv = s.vector_field();
    for p in &points {
        let rows = eval_rows(d_gens, p)?;
        let r = distance_from_span(&rows, &sv.eval(p)?);
        if r > MEMBERSHIP_TOL {
            return Err(MotionError::NotInDistribution {
                residual: r,
                witness: p.clone(),
            });
        }
    }
    Ok(points)
}

/// `ρ = dH − i_S ω` and its components on `D`.
pub fn residual(
    s: &SemiSpray,
    omega: &TwoForm,
    h: &Expr,
    d_gens: &[VectorField],
    sampler: &Sampler,
) -> Result<MotionReport, MotionError> {
    let n = s.n;
    let points = check_membership(s, d_gens, sampler)?;
    let w = coordinate_form(s, omega);
    let dh = differential(h, n);
    let rho = dh.sub(&interior_product(&s.vector_field(), &w));
    let components: Vec<Expr> = d_gens.iter().map(|e| rho.eval_on(e)).collect();
    let verdicts: Vec<ZeroReport> = components.iter().map(|c| zero_test(c, sampler)).collect();
    let mut rng = sampler.rng();
    let mut numeric_max = 0.0f64;
    let mut samples = 0;
    let concrete: Vec<Expr> = components
        .iter()
        .map(|c| sampler.concretize(c, &mut rng))
        .collect();
    for p in &points {
        let vals: Result<Vec<f64>, _> = concrete.iter().map(|c| c.eval(p)).collect();
        if let Ok(vals) = vals {
            samples += 1;
            numeric_max = vals.iter().fold(numeric_max, |m, v| m.max(v.abs()));
        }
    }
    let s_of_h = s.apply(h);
    let s_of_h_verdict = zero_test(&s_of_h, sampler);
    Ok(MotionReport {
        residual_form: rho,
        components,
        verdicts,
        numeric_max,
        samples,
        s_of_h,
        s_of_h_verdict,
        trivial: dh.is_zero_literal() && w.is_zero_literal(),
        certificate: None,
    })
}

pub fn is_constant_of_motion(s: &SemiSpray, h: &Expr, sampler: &Sampler) -> ZeroTest {
    zero_test(&s.apply(h), sampler).verdict
}

/// Integrability of `D` from its generator brackets.
///
/// Literal closure or full rank proves integrability; a bracket measurably
/// outside `span(D)` at a sampled point refutes it.
pub fn distribution_integrability(
    d_gens: &[VectorField],
    sampler: &Sampler,
) -> Result<(ZeroTest, f64), MotionError> {
    let mut brackets = Vec::new();
    for i in 0..d_gens.len() {
        for j in i + 1..d_gens.len() {
            let b = d_gens[i].lie_bracket(&d_gens[j]);
            if !b.is_zero_literal() {
                brackets.push(b);
            }
        }
    }
    if brackets.is_empty() {
        return Ok((ZeroTest::ProvenZero, 0.0));
    }
    let points = sampler.points(CHECK_POINTS);
    if points.is_empty() {
        return Err(MotionError::NoSamplePoints);
    }
    let full = 2 * sampler.n;
    let mut all_full = true;
    let mut worst = 0.0f64;
    for p in &points {
        let rows = eval_rows(d_gens, p)?;
        all_full &= !rows.is_empty() && Matrix::from_rows(&rows).rank(1e-9) == full;
        for b in &brackets {
            worst = worst.max(distance_from_span(&rows, &b.eval(p)?));
        }
    }
    let verdict = if all_full && worst <= MEMBERSHIP_TOL {
        ZeroTest::ProvenZero
    } else if worst > NON_INTEGRABLE_TOL {
        ZeroTest::ProvenNonzero
    } else {
        ZeroTest::Unknown
    };
    Ok((verdict, worst))
}

/// Residual plus the Hamiltonian certificate: `D` integrable and `dω = 0`.
pub fn hamiltonian_certificate(
    s: &SemiSpray,
    omega: &TwoForm,
    d: &Distribution,
    ann_gens: &[OneForm],
    h: &Expr,
    sampler: &Sampler,
) -> Result<MotionReport, MotionError> {
    let d_gens = d.generators(s);
    let mut report = residual(s, omega, h, &d_gens, sampler)?;
    let (integrable, integrability_residual) = match d {
        Distribution::Horizontal => (is_flat(s, sampler), 0.0),
        Distribution::Generators(g) => distribution_integrability(g, sampler)?,
    };
    let w = coordinate_form(s, omega);
    let closed = exterior_derivative_2(&w).is_zero(sampler);
    let ann: Vec<OneForm> = match d {
        Distribution::Horizontal if ann_gens.is_empty() => berwald_frame(s).dely,
        _ => ann_gens.to_vec(),
    };
    let base = from_distribution(&d_gens, &ann, sampler)?;
    let structure = gauge_transform(&base, &w);
    let parts = [report.residual_verdict(), integrable, closed];
    let overall = if parts.iter().all(|v| v.is_proven_zero()) {
        Verdict::Yes
    } else if parts.contains(&ZeroTest::ProvenNonzero) {
        Verdict::No
    } else {
        Verdict::Unknown
    };
    report.certificate = Some(HamiltonianCertificate {
        integrable,
        integrability_residual,
        closed,
        overall,
        structure,
    });
    Ok(report)
}

/// `(S, dH)`, the generator of `L_ω` over `S` in closed form.
pub fn hamiltonian_section(s: &SemiSpray, h: &Expr) -> Section {
    Section::new(s.vector_field(), differential(h, s.n))
}
