// SPDX-License-Identifier: Apache-2.0

//! Canonicalization through a Laurent-polynomial normal form.
//!
//! An expression is flattened into a sum of `coefficient * Π atom^exponent`
//! where atoms are coordinates, parameters, function applications, and sums or
//! monomials that cannot be expanded (negative or fractional powers). Sums used
//! as atoms are scaled so their first term has coefficient one. Quotients by a
//! sum atom are reduced with single-divisor polynomial division so that
//! `(x^2+1)/(x^2+1)` and `(a*s + b)/s^2 = a/s + b/s^2` reach the same form.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::cmp::Ordering;

use super::{Expr, Func, Number, Rational};

type Monomial = BTreeMap<Expr, Rational>;

/// Positive integer powers of sums above this are kept unexpanded.
const EXPAND_LIMIT: i64 = 8;
const DIVISION_STEP_LIMIT: usize = 256;
const FIXPOINT_LIMIT: usize = 8;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub(crate) struct Poly {
    terms: BTreeMap<Monomial, Number>,
}

impl Poly {
    fn zero() -> Poly {
        Poly::default()
    }

    fn constant(c: Number) -> Poly {
        let mut p = Poly::zero();
        p.add_term(Monomial::new(), c);
        p
    }

    fn atom(e: Expr, q: Rational) -> Poly {
        let mut m = Monomial::new();
        m.insert(e, q);
        normalize_monomial(m, Number::ONE)
    }

    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn as_constant(&self) -> Option<Number> {
        match self.terms.len() {
            0 => Some(Number::ZERO),
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                m.is_empty().then_some(*c)
            }
            _ => None,
        }
    }

    fn single_term(&self) -> Option<(&Monomial, Number)> {
        if self.terms.len() == 1 {
            self.terms.iter().next().map(|(m, c)| (m, *c))
        } else {
            None
        }
    }

    fn leading_coefficient(&self) -> Number {
        self.terms.values().next().copied().unwrap_or(Number::ZERO)
    }

    fn add_term(&mut self, m: Monomial, c: Number) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(existing) => {
                let s = *existing + c;
                if s.is_zero() {
                    self.terms.remove(&m);
                } else {
                    *existing = s;
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    fn add_poly(&mut self, other: &Poly) {
        for (m, c) in &other.terms {
            self.add_term(m.clone(), *c);
        }
    }

    fn scale(&self, c: Number) -> Poly {
        let mut out = Poly::zero();
        if c.is_zero() {
            return out;
        }
        for (m, v) in &self.terms {
            out.add_term(m.clone(), *v * c);
        }
        out
    }

    fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                let mut m = m1.clone();
                let mut composite = false;
                for (a, q) in m2 {
                    let e = m.entry(a.clone()).or_insert(Rational::ZERO);
                    *e = e.checked_add(*q).unwrap_or(*e);
                }
                m.retain(|a, q| {
                    composite |= !is_plain_atom(a);
                    !q.is_zero()
                });
                let c = *c1 * *c2;
                if composite {
                    out.add_poly(&normalize_monomial(m, c));
                } else {
                    out.add_term(m, c);
                }
            }
        }
        out
    }

    fn pow_int(&self, k: i64) -> Poly {
        pow(self, Rational::integer(k))
    }
}

fn is_plain_atom(e: &Expr) -> bool {
    matches!(
        e,
        Expr::Var(_) | Expr::Param(_) | Expr::Func(..) | Expr::Apply { .. }
    )
}

fn floor_rational(q: Rational) -> i64 {
    q.numer().div_euclid(q.denom())
}

/// Re-establishes monomial invariants: constant-base atoms carry exponents in
/// `(0, 1)`, and composite atoms raised to integer powers are expanded.
fn normalize_monomial(m: Monomial, coeff: Number) -> Poly {
    let mut coeff = coeff;
    let mut plain = Monomial::new();
    let mut expand: Vec<Poly> = Vec::new();
    for (atom, q) in m {
        if q.is_zero() {
            continue;
        }
        match &atom {
            Expr::Var(_) | Expr::Param(_) | Expr::Func(..) | Expr::Apply { .. } => {
                plain.insert(atom, q);
            }
            Expr::Const(c) => {
                if let Some(v) = c.pow(q) {
                    coeff = coeff * v;
                    continue;
                }
                let k = floor_rational(q);
                let frac = q.checked_sub(Rational::integer(k)).unwrap_or(q);
                match c.pow(Rational::integer(k)) {
                    Some(v) => {
                        coeff = coeff * v;
                        if !frac.is_zero() {
                            merge_exponent(&mut plain, atom.clone(), frac);
                        }
                    }
                    None => merge_exponent(&mut plain, atom.clone(), q),
                }
            }
            Expr::Add(_) => {
                if q.is_integer() && q.numer() > 0 && q.numer() <= EXPAND_LIMIT {
                    expand.push(to_poly(&atom).pow_int(q.numer()));
                } else {
                    plain.insert(atom, q);
                }
            }
            _ => {
                if q.is_integer() {
                    expand.push(pow(&to_poly(&atom), q));
                } else {
                    plain.insert(atom, q);
                }
            }
        }
    }
    let mut out = Poly::zero();
    out.add_term(plain, coeff);
    for p in expand {
        out = out.mul(&p);
    }
    out
}

fn merge_exponent(m: &mut Monomial, atom: Expr, q: Rational) {
    let e = m.entry(atom).or_insert(Rational::ZERO);
    *e = e.checked_add(q).unwrap_or(*e);
    m.retain(|_, q| !q.is_zero());
}

fn const_pow(c: Number, q: Rational) -> Poly {
    if let Some(v) = c.pow(q) {
        return Poly::constant(v);
    }
    if let Number::Rational(r) = c {
        if q.is_integer() && !r.is_zero() {
            // Exact power overflowed.
            return Poly::constant(Number::Real(libm::pow(r.to_f64(), q.to_f64())));
        }
    }
    Poly::atom(Expr::Const(c), q)
}

fn pow(p: &Poly, q: Rational) -> Poly {
    if q.is_zero() {
        return Poly::constant(Number::ONE);
    }
    if q.is_one() {
        return p.clone();
    }
    if let Some(c) = p.as_constant() {
        if c.is_zero() && !q.is_negative() {
            return Poly::zero();
        }
        return const_pow(c, q);
    }
    if let Some((m, c)) = p.single_term() {
        if q.is_integer() {
            let cq = match c.pow(q) {
                Some(v) => v,
                None => Number::Real(libm::pow(c.to_f64(), q.to_f64())),
            };
            let mut mm = Monomial::new();
            for (a, e) in m {
                mm.insert(a.clone(), e.checked_mul(q).unwrap_or(*e));
            }
            return normalize_monomial(mm, cq);
        }
        if c.is_negative() {
            return Poly::atom(to_expr(p), q);
        }
        let base = if m.len() == 1 {
            let (a, e) = m.iter().next().unwrap();
            if e.is_one() {
                return const_pow(c, q).mul(&Poly::atom(a.clone(), q));
            }
            monomial_expr(m, Number::ONE)
        } else {
            monomial_expr(m, Number::ONE)
        };
        return const_pow(c, q).mul(&Poly::atom(base, q));
    }
    // Genuine sum.
    if q.is_integer() && q.numer() > 0 && q.numer() <= EXPAND_LIMIT {
        let mut acc = p.clone();
        for _ in 1..q.numer() {
            acc = acc.mul(p);
        }
        return acc;
    }
    let lead = p.leading_coefficient();
    if q.is_integer() || !lead.is_negative() {
        let inv = lead.recip().unwrap_or(Number::ONE);
        let monic = p.scale(inv);
        return const_pow(lead, q).mul(&Poly::atom(to_expr(&monic), q));
    }
    Poly::atom(to_expr(p), q)
}

fn func_poly(f: Func, arg: Expr) -> Poly {
    if let Expr::Const(Number::Real(v)) = arg {
        let out = match f {
            Func::Sin => Some(libm::sin(v)),
            Func::Cos => Some(libm::cos(v)),
            Func::Exp => Some(libm::exp(v)),
            Func::Ln => (v > 0.0).then(|| libm::log(v)),
            Func::Sqrt => (v >= 0.0).then(|| libm::sqrt(v)),
        };
        if let Some(out) = out.filter(|o| o.is_finite()) {
            return Poly::constant(Number::Real(out));
        }
    }
    match f {
        Func::Sqrt => pow(&to_poly(&arg), Rational::HALF),
        Func::Sin | Func::Cos => {
            if arg.is_zero_literal() {
                return Poly::constant(if f == Func::Sin {
                    Number::ZERO
                } else {
                    Number::ONE
                });
            }
            let ap = to_poly(&arg);
            if ap.leading_coefficient().is_negative() {
                let flipped = to_expr(&ap.scale(Number::int(-1)));
                let p = Poly::atom(Expr::Func(f, Box::new(flipped)), Rational::ONE);
                return if f == Func::Sin {
                    p.scale(Number::int(-1))
                } else {
                    p
                };
            }
            Poly::atom(Expr::Func(f, Box::new(arg)), Rational::ONE)
        }
        Func::Exp => match arg {
            a if a.is_zero_literal() => Poly::constant(Number::ONE),
            Expr::Func(Func::Ln, inner) => to_poly(&inner),
            a => Poly::atom(Expr::Func(Func::Exp, Box::new(a)), Rational::ONE),
        },
        Func::Ln => match arg {
            a if a.is_one_literal() => Poly::zero(),
            Expr::Func(Func::Exp, inner) => to_poly(&inner),
            a => Poly::atom(Expr::Func(Func::Ln, Box::new(a)), Rational::ONE),
        },
    }
}

fn to_poly(e: &Expr) -> Poly {
    match e {
        Expr::Const(c) => Poly::constant(*c),
        Expr::Var(_) | Expr::Param(_) => Poly::atom(e.clone(), Rational::ONE),
        Expr::Neg(a) => to_poly(a).scale(Number::int(-1)),
        Expr::Add(v) => {
            let mut out = Poly::zero();
            for t in v {
                out.add_poly(&to_poly(t));
            }
            out
        }
        Expr::Mul(v) => {
            let mut out = Poly::constant(Number::ONE);
            for t in v {
                out = out.mul(&to_poly(t));
                if out.is_zero() {
                    break;
                }
            }
            out
        }
        Expr::Div(a, b) => to_poly(a).mul(&to_poly_pow(b, Rational::MINUS_ONE)),
        Expr::Pow(b, q) => to_poly_pow(b, *q),
        Expr::Func(f, a) => func_poly(*f, canonical(a)),
        Expr::Apply { name, order, arg } => Poly::atom(
            Expr::Apply {
                name: name.clone(),
                order: *order,
                arg: Box::new(canonical(arg)),
            },
            Rational::ONE,
        ),
    }
}

/// `e^q`, pushing integer powers through products and nested powers before
/// expanding, so that `1/s^2` keeps `s` as its atom instead of the expanded square.
fn to_poly_pow(e: &Expr, q: Rational) -> Poly {
    if !q.is_integer() {
        return pow(&to_poly(e), q);
    }
    match e {
        Expr::Pow(b, q2) => match q2.checked_mul(q) {
            Some(r) => to_poly_pow(b, r),
            None => pow(&to_poly(e), q),
        },
        Expr::Mul(v) => {
            let mut out = Poly::constant(Number::ONE);
            for t in v {
                out = out.mul(&to_poly_pow(t, q));
            }
            out
        }
        Expr::Div(a, b) => to_poly_pow(a, q).mul(&to_poly_pow(b, -q)),
        Expr::Neg(a) => {
            let sign = if q.numer() % 2 == 0 { 1 } else { -1 };
            to_poly_pow(a, q).scale(Number::int(sign))
        }
        _ => pow(&to_poly(e), q),
    }
}

fn monomial_expr(m: &Monomial, c: Number) -> Expr {
    let mut factors: Vec<Expr> = Vec::with_capacity(m.len() + 1);
    if !c.is_one() {
        factors.push(Expr::Const(c));
    }
    for (a, q) in m {
        if q.is_one() {
            factors.push(a.clone());
        } else {
            factors.push(Expr::Pow(Box::new(a.clone()), *q));
        }
    }
    match factors.len() {
        0 => Expr::Const(c),
        1 => factors.pop().unwrap(),
        _ => Expr::Mul(factors),
    }
}

fn to_expr(p: &Poly) -> Expr {
    let mut terms: Vec<Expr> = p.terms.iter().map(|(m, c)| monomial_expr(m, *c)).collect();
    match terms.len() {
        0 => Expr::zero(),
        1 => terms.pop().unwrap(),
        _ => Expr::Add(terms),
    }
}

// --- quotient reduction by sum atoms -------------------------------------

/// Lexicographic monomial order: the smallest atom is the most significant.
fn lex_cmp(a: &Monomial, b: &Monomial) -> Ordering {
    let mut ia = a.iter().peekable();
    let mut ib = b.iter().peekable();
    loop {
        match (ia.peek(), ib.peek()) {
            (None, None) => return Ordering::Equal,
            (Some((_, qa)), None) => return qa.cmp(&&Rational::ZERO),
            (None, Some((_, qb))) => return Rational::ZERO.cmp(qb),
            (Some((xa, qa)), Some((xb, qb))) => match xa.cmp(xb) {
                Ordering::Less => return qa.cmp(&&Rational::ZERO),
                Ordering::Greater => return Rational::ZERO.cmp(qb),
                Ordering::Equal => {
                    let o = qa.cmp(qb);
                    if o != Ordering::Equal {
                        return o;
                    }
                    ia.next();
                    ib.next();
                }
            },
        }
    }
}

fn leading_term(p: &Poly) -> Option<(&Monomial, Number)> {
    p.terms
        .iter()
        .max_by(|a, b| lex_cmp(a.0, b.0))
        .map(|(m, c)| (m, *c))
}

fn divides(lt: &Monomial, t: &Monomial) -> bool {
    lt.iter()
        .all(|(a, q)| t.get(a).copied().unwrap_or(Rational::ZERO) >= *q)
}

fn mono_div(t: &Monomial, lt: &Monomial) -> Monomial {
    let mut out = t.clone();
    for (a, q) in lt {
        let e = out.entry(a.clone()).or_insert(Rational::ZERO);
        *e = e.checked_sub(*q).unwrap_or(*e);
    }
    out.retain(|_, q| !q.is_zero());
    out
}

/// `g = quotient * s + remainder` with no remainder term divisible by `LT(s)`.
fn divide(g: &Poly, s: &Poly) -> Option<(Poly, Poly)> {
    let (lt, lc) = leading_term(s)?;
    let lt = lt.clone();
    let lc_inv = lc.recip()?;
    let mut work = g.clone();
    let mut quotient = Poly::zero();
    let mut remainder = Poly::zero();
    for _ in 0..DIVISION_STEP_LIMIT {
        let Some((t, c)) = leading_term(&work).map(|(m, c)| (m.clone(), c)) else {
            return Some((quotient, remainder));
        };
        if divides(&lt, &t) {
            let mut q = Poly::zero();
            q.add_term(mono_div(&t, &lt), c * lc_inv);
            let sub = q.mul(s).scale(Number::int(-1));
            quotient.add_poly(&q);
            work.add_poly(&sub);
            // Real coefficients may leave a rounding residue on `t`.
            work.terms.remove(&t);
        } else {
            work.terms.remove(&t);
            remainder.add_term(t, c);
        }
    }
    None
}

fn reduce_by_atom(p: &Poly, s_atom: &Expr) -> Option<Poly> {
    let s = to_poly(s_atom);
    let mut rest = Poly::zero();
    let mut groups: BTreeMap<i64, Poly> = BTreeMap::new();
    for (m, c) in &p.terms {
        match m.get(s_atom) {
            Some(q) if q.is_integer() && q.is_negative() => {
                let mut mm = m.clone();
                mm.remove(s_atom);
                groups.entry(q.numer()).or_default().add_term(mm, *c);
            }
            _ => rest.add_term(m.clone(), *c),
        }
    }
    let e_min = *groups.keys().next()?;
    // Combine into g * s^e_min.
    let mut g = Poly::zero();
    for (e, part) in &groups {
        let shift = e - e_min;
        g.add_poly(&part.mul(&s.pow_int(shift)));
    }
    // Peel remainders off one power at a time.
    let mut out = rest;
    let mut exp = e_min;
    while exp < 0 && !g.is_zero() {
        let (q, r) = divide(&g, &s)?;
        if !r.is_zero() {
            out = add(
                &out,
                &r.mul(&Poly::atom(s_atom.clone(), Rational::integer(exp))),
            );
        }
        g = q;
        exp += 1;
    }
    if exp == 0 {
        out = add(&out, &g);
    } else if !g.is_zero() {
        out = add(
            &out,
            &g.mul(&Poly::atom(s_atom.clone(), Rational::integer(exp))),
        );
    }
    Some(out)
}

fn add(a: &Poly, b: &Poly) -> Poly {
    let mut out = a.clone();
    out.add_poly(b);
    out
}

fn reduce_quotients(mut p: Poly) -> Poly {
    let mut done: Vec<Expr> = Vec::new();
    for _ in 0..16 {
        let Some(atom) = p
            .terms
            .keys()
            .flat_map(|m| m.iter())
            .filter(|(a, q)| {
                matches!(a, Expr::Add(_)) && q.is_integer() && q.is_negative() && !done.contains(a)
            })
            .map(|(a, _)| a.clone())
            .next()
        else {
            break;
        };
        if let Some(next) = reduce_by_atom(&p, &atom) {
            p = next;
        }
        done.push(atom);
    }
    p
}

fn canonical_once(e: &Expr) -> Expr {
    to_expr(&reduce_quotients(to_poly(e)))
}

pub(crate) fn canonical(e: &Expr) -> Expr {
    let mut cur = canonical_once(e);
    for _ in 0..FIXPOINT_LIMIT {
        let next = canonical_once(&cur);
        if next == cur {
            return cur;
        }
        cur = next;
    }
    cur
}

impl Expr {
    /// Canonical form. Idempotent: `e.simplify().simplify() == e.simplify()`.
    pub fn simplify(&self) -> Expr {
        canonical(self)
    }

    /// Expands `self` as `Σ coefficient * (Π atom^exponent)` for callers that
    /// need coefficient extraction (the ansatz dictionary, the printers).
    pub fn canonical_terms(&self) -> Vec<(Number, Expr)> {
        let p = reduce_quotients(to_poly(self));
        p.terms
            .iter()
            .map(|(m, c)| (*c, monomial_expr(m, Number::ONE)))
            .collect()
    }
}
