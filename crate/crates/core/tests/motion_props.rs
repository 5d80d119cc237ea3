// SPDX-License-Identifier: Apache-2.0

mod common;

use common::{poly, two_form};
use proptest::prelude::*;
use spraydirac_core::expr::{zero_test, Expr, Point, ZeroTest};
use spraydirac_core::fields::VectorField;
use spraydirac_core::forms::{Basis, TwoForm};
use spraydirac_core::integrate::{conservation_drift, integrate_sode, Method};
use spraydirac_core::motion::{is_constant_of_motion, residual};
use spraydirac_core::sample::Sampler;
use spraydirac_core::spray::{berwald_frame, SemiSpray};

const N: usize = 2;

fn full_frame(n: usize) -> Vec<VectorField> {
    (0..n)
        .map(|i| VectorField::d_x(n, i))
        .chain((0..n).map(|a| VectorField::d_y(n, a)))
        .collect()
}

fn semispray() -> impl Strategy<Value = SemiSpray> {
    proptest::collection::vec(poly(N), N).prop_map(SemiSpray::new)
}

fn proven_zero(e: &Expr) -> bool {
    zero_test(e, &Sampler::new(N, 7)).verdict == ZeroTest::ProvenZero
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn residual_is_linear(
        s in semispray(),
        w1 in two_form(N),
        w2 in two_form(N),
        h1 in poly(N),
        h2 in poly(N),
    ) {
        let d = full_frame(N);
        let sampler = Sampler::new(N, 3);
        let sum = residual(&s, &w1.add(&w2), &(h1.clone() + h2.clone()), &d, &sampler).unwrap();
        let a = residual(&s, &w1, &h1, &d, &sampler).unwrap();
        let b = residual(&s, &w2, &h2, &d, &sampler).unwrap();
        for k in 0..d.len() {
            let diff = sum.components[k].clone() - a.components[k].clone() - b.components[k].clone();
            prop_assert!(proven_zero(&diff));
            prop_assert!(diff.simplify().is_zero_literal());
        }
    }

    /// `ρ(S) = S(H) − ω(S, S) = S(H)`, so a vanishing residual on any `D ∋ S`
    /// forces `S(H) = 0`.
    #[test]
    fn residual_on_spray_is_derivative_of_hamiltonian(
        s in semispray(),
        w in two_form(N),
        h in poly(N),
    ) {
        let d = vec![s.vector_field()];
        let r = residual(&s, &w, &h, &d, &Sampler::new(N, 5)).unwrap();
        prop_assert!(proven_zero(&(r.components[0].clone() - r.s_of_h.clone())));
        if r.residual_verdict() == ZeroTest::ProvenZero {
            prop_assert_eq!(r.s_of_h_verdict.verdict, ZeroTest::ProvenZero);
        }
    }
}

struct Fixture {
    spray: SemiSpray,
    omega: TwoForm,
    h: Expr,
    d: Vec<VectorField>,
    sampler: Sampler,
}

fn fixtures() -> Vec<Fixture> {
    let mut out = Vec::new();

    // Linear oscillator on TR.
    let s = SemiSpray::new(vec![Expr::rational(1, 2) * Expr::x(0)]);
    out.push(Fixture {
        omega: TwoForm::zero(1, Basis::Coordinate).with_term(0, 1, Expr::one()),
        h: Expr::rational(1, 2) * (Expr::x(0).powi(2) + Expr::y(0).powi(2)),
        d: full_frame(1),
        sampler: s.sampler(1),
        spray: s,
    });

    // Flat spray G^2 = y2^2 with the horizontal distribution.
    let s = SemiSpray::new(vec![Expr::zero(), Expr::y(1).powi(2)])
        .with_singular([Expr::y(0), Expr::y(1)]);
    let d = berwald_frame(&s).horizontal;
    out.push(Fixture {
        omega: TwoForm::zero(2, Basis::Coordinate),
        h: Expr::y(0),
        d,
        sampler: s.sampler(2),
        spray: s,
    });

    // Constrained motion with a vertical force, A = 0.02.
    let a = Expr::rational(1, 50);
    let s = SemiSpray::new(vec![
        a.clone() * Expr::y(0) / Expr::y(2),
        a.clone() * Expr::y(1) / Expr::y(2),
        a.clone(),
    ])
    .with_singular([Expr::y(2)]);
    let f = berwald_frame(&s);
    out.push(Fixture {
        omega: TwoForm::zero(3, Basis::Berwald).with_term(2, 5, Expr::int(2)),
        h: Expr::y(2).powi(2) + Expr::int(4) * a * Expr::x(2),
        d: vec![
            f.horizontal[0].clone(),
            f.horizontal[1].clone(),
            s.vector_field(),
        ],
        sampler: s.sampler(3).with_margin(0.5),
        spray: s,
    });
    out
}

#[test]
fn zero_residual_fixtures_conserve_hamiltonian() {
    for (k, f) in fixtures().iter().enumerate() {
        let r = residual(&f.spray, &f.omega, &f.h, &f.d, &f.sampler).unwrap();
        assert_eq!(r.residual_verdict(), ZeroTest::ProvenZero, "fixture {k}");
        assert_eq!(
            is_constant_of_motion(&f.spray, &f.h, &f.sampler),
            ZeroTest::ProvenZero,
            "fixture {k}"
        );
    }
}

#[test]
fn zero_residual_fixtures_have_small_drift() {
    let tol = 1e-10;
    for (k, f) in fixtures().iter().enumerate() {
        for p0 in f.sampler.clone().with_half_width(1.0).points(5) {
            let p0 = shifted_away(&p0, k);
            let traj = integrate_sode(&f.spray, &p0, 1e-2, 200, Method::Rk45 { tol }).unwrap();
            let drift = conservation_drift(&traj, &f.h).unwrap();
            assert!(drift <= 100.0 * tol, "fixture {k}: drift {drift}");
        }
    }
}

/// Keeps `y` away from the singular loci over the integration window.
fn shifted_away(p: &Point, fixture: usize) -> Point {
    let mut q = p.clone();
    match fixture {
        1 => {
            q.y[0] = q.y[0].abs() + 0.5;
            q.y[1] = q.y[1].abs() + 0.5;
        }
        2 => q.y[2] = q.y[2].abs() + 1.0,
        _ => {}
    }
    q
}
