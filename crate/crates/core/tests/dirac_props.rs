// SPDX-License-Identifier: Apache-2.0

mod common;

use common::{one_form, point, poly, rel_close, section, small_section, two_form};
use proptest::prelude::*;
use spraydirac_core::dirac::{
    courant_bracket, from_distribution, gauge_transform, involutivity_residual, is_isotropic_at,
    jacobi_sides, pairing, Section,
};
use spraydirac_core::expr::{Expr, ZeroTest};
use spraydirac_core::fields::{OneForm, VectorField};
use spraydirac_core::forms::{exterior_derivative_1, exterior_derivative_2};
use spraydirac_core::sample::Sampler;

const N: usize = 2;

/// `1 + u^2`, a nowhere-vanishing rescaling.
fn positive() -> impl Strategy<Value = Expr> {
    poly(N).prop_map(|u| Expr::one() + u.powi(2))
}

/// A rescaled, sheared frame of `span{∂x1, ∂x2, ∂y1}` with annihilator `dy2`.
fn integrable_structure(f: &[Expr]) -> (Vec<VectorField>, Vec<OneForm>) {
    let mut d = vec![
        VectorField::d_x(N, 0).scale(&f[0]),
        VectorField::d_x(N, 1).scale(&f[1]),
        VectorField::d_y(N, 0).scale(&f[2]),
    ];
    d[0].base[1] = f[1].clone() * Expr::y(0);
    (d, vec![OneForm::dy_basis(N, 1)])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn pairing_is_symmetric(a in section(N), b in section(N)) {
        let d = pairing(&a, &b) - pairing(&b, &a);
        prop_assert!(d.simplify().is_zero_literal());
    }

    #[test]
    fn courant_bracket_is_antisymmetric(a in section(N), b in section(N)) {
        let s = courant_bracket(&a, &b).add(&courant_bracket(&b, &a)).simplify();
        prop_assert!(s.is_zero_literal(), "{:?}", s);
    }

    #[test]
    fn exterior_derivative_squares_to_zero(a in one_form(N)) {
        let dd = exterior_derivative_2(&exterior_derivative_1(&a));
        prop_assert!(dd.is_zero_literal());
    }

    #[test]
    fn gauge_preserves_isotropy(
        f in proptest::collection::vec(positive(), 3),
        w in two_form(N),
        pts in proptest::collection::vec(point(N, 1.5), 5),
    ) {
        let (d, ann) = integrable_structure(&f);
        let l = from_distribution(&d, &ann, &Sampler::new(N, 1)).unwrap();
        let g = gauge_transform(&l, &w);
        for p in &pts {
            prop_assert!(is_isotropic_at(&g, p, 1e-9).unwrap());
        }
    }

    #[test]
    fn opposite_gauges_cancel(
        f in proptest::collection::vec(positive(), 3),
        w in two_form(N),
    ) {
        let (d, ann) = integrable_structure(&f);
        let l = from_distribution(&d, &ann, &Sampler::new(N, 1)).unwrap();
        let back = gauge_transform(&gauge_transform(&l, &w), &w.neg());
        for (a, b) in back.generators.iter().zip(&l.generators) {
            prop_assert_eq!(a.simplify(), b.simplify());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn closed_gauge_of_integrable_distribution_is_involutive(
        f in proptest::collection::vec(positive(), 3),
        alpha in one_form(N),
        pts in proptest::collection::vec(point(N, 1.0), 20),
    ) {
        let (d, ann) = integrable_structure(&f);
        let l = from_distribution(&d, &ann, &Sampler::new(N, 1)).unwrap();
        let w = exterior_derivative_1(&alpha);
        let g = gauge_transform(&l, &w);
        for p in &pts {
            let r = involutivity_residual(&g, p).unwrap();
            prop_assert!(r <= 1e-8, "residual {r}");
        }
    }

    #[test]
    fn jacobiator_is_exact(
        a in small_section(N),
        b in small_section(N),
        c in small_section(N),
        pts in proptest::collection::vec(point(N, 1.0), 5),
    ) {
        let (lhs, rhs) = jacobi_sides(&a, &b, &c);
        for p in &pts {
            let l = lhs.eval(p).unwrap();
            let r = rhs.eval(p).unwrap();
            for (u, v) in l.iter().zip(&r) {
                prop_assert!(rel_close(*u, *v, 1e-7), "{u} vs {v}");
            }
        }
    }
}

#[test]
fn non_closed_gauge_breaks_involutivity() {
    let (d, ann) = integrable_structure(&[Expr::one(), Expr::one(), Expr::one()]);
    let l = from_distribution(&d, &ann, &Sampler::new(N, 1)).unwrap();
    let w = spraydirac_core::forms::TwoForm::zero(N, spraydirac_core::forms::Basis::Coordinate)
        .with_term(0, 1, Expr::y(0));
    assert_ne!(
        exterior_derivative_2(&w).is_zero(&Sampler::new(N, 1)),
        ZeroTest::ProvenZero
    );
    let g = gauge_transform(&l, &w);
    let p = spraydirac_core::expr::Point::new(vec![0.3, -0.2], vec![0.5, 0.7]);
    assert!(involutivity_residual(&g, &p).unwrap() > 1e-3);
}

#[test]
fn pairing_of_vector_and_covector() {
    let a = Section::vector(VectorField::d_x(N, 1));
    let b = Section::covector(OneForm::dx_basis(N, 1).scale(&Expr::y(0)));
    assert_eq!(pairing(&a, &b), Expr::y(0));
}
