// SPDX-License-Identifier: Apache-2.0

use proptest::prelude::*;
use spraydirac_core::ansatz::{known_vector, search, Ansatz, SearchResult};
use spraydirac_core::expr::{Expr, ZeroTest};
use spraydirac_core::fields::VectorField;
use spraydirac_core::motion::{residual, Distribution};
use spraydirac_core::spray::SemiSpray;

struct Fixture {
    name: &'static str,
    spray: SemiSpray,
    d: Distribution,
    degree: usize,
    /// Known `H` as monomial terms and `ω` as unit forms `θ_k ∧ θ_l`.
    known_h: Vec<(Expr, f64)>,
    known_omega: Vec<((usize, usize), f64)>,
}

fn full(n: usize) -> Distribution {
    Distribution::Generators(
        (0..n)
            .map(|i| VectorField::d_x(n, i))
            .chain((0..n).map(|a| VectorField::d_y(n, a)))
            .collect(),
    )
}

fn fixtures() -> Vec<Fixture> {
    vec![
        Fixture {
            name: "oscillator",
            spray: SemiSpray::new(vec![Expr::rational(1, 2) * Expr::x(0)]),
            d: full(1),
            degree: 2,
            known_h: vec![(Expr::x(0).powi(2), 0.5), (Expr::y(0).powi(2), 0.5)],
            known_omega: vec![((0, 1), 1.0)],
        },
        Fixture {
            name: "flat quadratic spray",
            spray: SemiSpray::new(vec![Expr::zero(), Expr::y(1).powi(2)])
                .with_singular([Expr::y(0), Expr::y(1)]),
            d: Distribution::Horizontal,
            degree: 1,
            known_h: vec![(Expr::y(0), 1.0)],
            known_omega: vec![],
        },
        Fixture {
            name: "free particle",
            spray: SemiSpray::zero(3),
            d: full(3),
            degree: 2,
            known_h: (0..3).map(|a| (Expr::y(a).powi(2), 0.5)).collect(),
            known_omega: (0..3).map(|a| ((a, 3 + a), 1.0)).collect(),
        },
    ]
}

fn known(a: &Ansatz, f: &Fixture) -> Vec<f64> {
    let h: Vec<(usize, f64)> = f
        .known_h
        .iter()
        .map(|(m, c)| {
            let m = m.simplify();
            let k = a.h_dictionary.iter().position(|d| *d == m).unwrap();
            (k, *c)
        })
        .collect();
    let w: Vec<(usize, f64)> = f
        .known_omega
        .iter()
        .map(|((k, l), c)| {
            let i = a
                .omega_dictionary
                .iter()
                .position(|w| w.get(*k, *l).is_one_literal())
                .unwrap();
            (i, *c)
        })
        .collect();
    known_vector(a, &h, &w)
}

fn run(f: &Fixture, seed: u64, half_width: f64, points: usize) -> (Ansatz, SearchResult) {
    let sampler = f
        .spray
        .sampler(seed)
        .with_half_width(half_width)
        .with_margin(0.05 * half_width);
    let mut a = Ansatz::new(f.spray.n, f.degree, sampler);
    a.points = points;
    let r = search(&f.spray, &f.d, &[], &a).unwrap();
    (a, r)
}

#[test]
fn known_solutions_are_recovered() {
    for f in fixtures() {
        let (a, r) = run(&f, 1, 2.0, 0);
        let v = known(&a, &f);
        let res = r.solution.projection_residual(&v);
        assert!(res <= 1e-8, "{}: projection residual {res}", f.name);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn candidates_hold_at_fresh_points(seed in 0u64..1000) {
        for f in fixtures() {
            let (a, r) = run(&f, seed, 2.0, 0);
            prop_assert!(!r.solution.candidates.is_empty(), "{}", f.name);
            let fresh = a.sampler.clone().with_seed(seed + 10_000);
            for c in &r.solution.candidates {
                let rep = residual(&f.spray, &c.omega, &c.h, &f.d.generators(&f.spray), &fresh)
                    .unwrap();
                prop_assert!(
                    rep.residual_verdict() == ZeroTest::ProvenZero || rep.numeric_max <= 1e-9,
                    "{}: H = {}, residual {}", f.name, c.h, rep.numeric_max
                );
            }
        }
    }

    #[test]
    fn doubling_collocation_keeps_nullspace(seed in 0u64..1000) {
        for f in fixtures() {
            let (a, base) = run(&f, seed, 2.0, 0);
            let (_, doubled) = run(&f, seed, 2.0, 2 * a.collocation_count());
            prop_assert!(doubled.collocation_points >= 2 * base.collocation_points);
            prop_assert_eq!(
                base.solution.nullspace.len(),
                doubled.solution.nullspace.len(),
                "{}", f.name
            );
        }
    }

    #[test]
    fn wider_box_spans_the_same_solutions(seed in 0u64..1000) {
        for f in fixtures() {
            let (_, narrow) = run(&f, seed, 2.0, 0);
            let (_, wide) = run(&f, seed, 20.0, 0);
            prop_assert_eq!(
                narrow.solution.nullspace.len(),
                wide.solution.nullspace.len(),
                "{}", f.name
            );
            for c in &narrow.solution.candidates {
                let res = wide.solution.projection_residual(&c.coeffs());
                prop_assert!(res <= 1e-6, "{}: H = {} residual {}", f.name, c.h, res);
            }
        }
    }
}
