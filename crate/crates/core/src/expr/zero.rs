// SPDX-License-Identifier: Apache-2.0

//! Tri-state identity testing: exact simplification first, sampling second.

use super::{Expr, Point};
use crate::sample::Sampler;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ZeroTest {
    ProvenZero,
    ProvenNonzero,
    Unknown,
}

impl ZeroTest {
    pub fn is_proven_zero(self) -> bool {
        self == ZeroTest::ProvenZero
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ZeroTest::ProvenZero => "proven_zero",
            ZeroTest::ProvenNonzero => "proven_nonzero",
            ZeroTest::Unknown => "unknown",
        }
    }

    /// Conjunction over components that must all vanish.
    pub fn all(items: impl IntoIterator<Item = ZeroTest>) -> ZeroTest {
        let mut acc = ZeroTest::ProvenZero;
        for t in items {
            match t {
                ZeroTest::ProvenNonzero => return ZeroTest::ProvenNonzero,
                ZeroTest::Unknown => acc = ZeroTest::Unknown,
                ZeroTest::ProvenZero => {}
            }
        }
        acc
    }
}

impl core::fmt::Display for ZeroTest {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Minimum number of valid sample points before a numeric verdict is trusted.
pub const MIN_SAMPLES: usize = 32;
/// A sample is nonzero when `|value| > REL_TOL · Σ|term values|`.
pub const REL_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct ZeroReport {
    pub verdict: ZeroTest,
    /// Canonical form that was tested.
    pub canonical: Expr,
    pub samples_evaluated: usize,
    /// Largest `|value| / Σ|terms|` seen over valid samples.
    pub max_relative: f64,
    /// Largest absolute value seen over valid samples.
    pub max_abs: f64,
    /// First point (with concretized functions) whose value exceeded tolerance.
    pub witness: Option<(Point, f64)>,
    /// `e` with opaque functions concretized at the witness, when one was needed.
    pub witness_expr: Option<Expr>,
}

/// Zero test with the default sampling strategy over the coordinates `e` references.
pub fn is_zero(e: &Expr) -> ZeroTest {
    let n = e.dimension_needed().max(1);
    zero_test(e, &Sampler::new(n, 0x5eed)).verdict
}

/// Zero test sampling with `sampler`; its free parameters are extended by the
/// unbound parameters of `e`.
pub fn zero_test(e: &Expr, sampler: &Sampler) -> ZeroReport {
    let canonical = e.simplify();
    let mut report = ZeroReport {
        verdict: ZeroTest::Unknown,
        canonical: canonical.clone(),
        samples_evaluated: 0,
        max_relative: 0.0,
        max_abs: 0.0,
        witness: None,
        witness_expr: None,
    };
    if canonical.is_zero_literal() {
        report.verdict = ZeroTest::ProvenZero;
        return report;
    }
    let mut s = sampler.clone().free_params_of(&canonical);
    s.n = s.n.max(canonical.dimension_needed());
    let mut rng = s.rng();
    let points = s.points_from(&mut rng, 4 * MIN_SAMPLES);
    let has_opaque = !canonical.opaque_functions().is_empty();
    // Fresh generic function bodies every few points.
    const REBIND_EVERY: usize = 8;
    let mut concrete = canonical.clone();
    for (k, p) in points.iter().enumerate() {
        if has_opaque && k % REBIND_EVERY == 0 {
            concrete = s.concretize(&canonical, &mut rng);
        }
        let Ok(v) = concrete.eval(p) else { continue };
        let mut scale = 0.0;
        let mut ok = true;
        for t in concrete.terms() {
            match t.eval(p) {
                Ok(tv) => scale += tv.abs(),
                Err(_) => ok = false,
            }
        }
        if !ok {
            continue;
        }
        report.samples_evaluated += 1;
        let rel = if scale > 0.0 { v.abs() / scale } else { 0.0 };
        report.max_relative = report.max_relative.max(rel);
        report.max_abs = report.max_abs.max(v.abs());
        if v != 0.0 && rel > REL_TOL && report.witness.is_none() {
            report.witness = Some((p.clone(), v));
            if has_opaque {
                report.witness_expr = Some(concrete.clone());
            }
        }
        if report.samples_evaluated >= MIN_SAMPLES && report.witness.is_some() {
            break;
        }
    }
    report.verdict = if report.witness.is_some() {
        ZeroTest::ProvenNonzero
    } else {
        ZeroTest::Unknown
    };
    report
}
