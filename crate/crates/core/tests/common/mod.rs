// SPDX-License-Identifier: Apache-2.0

#![allow(dead_code)]

use proptest::prelude::*;
use spraydirac_core::dirac::Section;
use spraydirac_core::expr::{Expr, Func, Point};
use spraydirac_core::fields::{OneForm, VectorField};
use spraydirac_core::forms::{Basis, TwoForm};

/// Coordinates `x_1..x_n, y_1..y_n` as zero-based atoms.
fn atom(n: usize) -> impl Strategy<Value = Expr> {
    prop_oneof![
        (-3i64..=3).prop_map(Expr::int),
        (0..n).prop_map(Expr::x),
        (0..n).prop_map(Expr::y),
    ]
}

/// Polynomials of bounded size in the coordinates.
pub fn poly(n: usize) -> impl Strategy<Value = Expr> {
    atom(n).prop_recursive(3, 12, 3, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a + b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a - b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a * b),
        ]
    })
}

/// Smooth expressions defined everywhere: polynomials, `sin`, `cos`, `exp`,
/// rational scalings and quotients by `2 + u^2`.
pub fn smooth(n: usize) -> impl Strategy<Value = Expr> {
    atom(n).prop_recursive(3, 12, 3, move |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a + b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a * b),
            inner.clone().prop_map(|a| -a),
            inner.clone().prop_map(|a| Expr::func(Func::Sin, a)),
            inner.clone().prop_map(|a| Expr::func(Func::Cos, a)),
            inner.clone().prop_map(|a| Expr::func(Func::Exp, a)),
            (inner.clone(), 1i64..=5, 2i64..=7).prop_map(|(a, p, q)| Expr::rational(p, q) * a),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a / (Expr::int(2) + b.powi(2))),
        ]
    })
}

pub fn vector_field(n: usize) -> impl Strategy<Value = VectorField> {
    (
        proptest::collection::vec(poly(n), n),
        proptest::collection::vec(poly(n), n),
    )
        .prop_map(|(b, f)| VectorField::new(b, f))
}

pub fn one_form(n: usize) -> impl Strategy<Value = OneForm> {
    (
        proptest::collection::vec(poly(n), n),
        proptest::collection::vec(poly(n), n),
    )
        .prop_map(|(dx, dy)| OneForm { dx, dy })
}

pub fn section(n: usize) -> impl Strategy<Value = Section> {
    (vector_field(n), one_form(n)).prop_map(|(x, a)| Section::new(x, a))
}

pub fn point(n: usize, w: f64) -> impl Strategy<Value = Point> {
    (
        proptest::collection::vec(-w..w, n),
        proptest::collection::vec(-w..w, n),
    )
        .prop_map(|(x, y)| Point::new(x, y))
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

/// Low-degree polynomials, for properties whose cost grows quickly with size.
pub fn small_poly(n: usize) -> impl Strategy<Value = Expr> {
    atom(n).prop_recursive(2, 4, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a + b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a * b),
        ]
    })
}

pub fn small_section(n: usize) -> impl Strategy<Value = Section> {
    proptest::collection::vec(small_poly(n), 4 * n).prop_map(move |c| {
        Section::new(
            VectorField::new(c[..n].to_vec(), c[n..2 * n].to_vec()),
            OneForm {
                dx: c[2 * n..3 * n].to_vec(),
                dy: c[3 * n..].to_vec(),
            },
        )
    })
}

/// A two-form in the coordinate basis with polynomial coefficients.
pub fn two_form(n: usize) -> impl Strategy<Value = TwoForm> {
    let pairs = n * (2 * n - 1);
    proptest::collection::vec(poly(n), pairs).prop_map(move |cs| {
        let mut w = TwoForm::zero(n, Basis::Coordinate);
        let mut it = cs.into_iter();
        for k in 0..2 * n {
            for l in k + 1..2 * n {
                w.add_term(k, l, it.next().unwrap());
            }
        }
        w
    })
}
