// SPDX-License-Identifier: Apache-2.0

//! Exact rationals and the mixed rational/real constants carried by [`Expr`](super::Expr).

use core::cmp::Ordering;
use core::fmt;

/// A reduced fraction `num/den` with `den > 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Rational {
    num: i64,
    den: i64,
}

fn gcd(mut a: i128, mut b: i128) -> i128 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

impl Rational {
    pub const ZERO: Rational = Rational { num: 0, den: 1 };
    pub const ONE: Rational = Rational { num: 1, den: 1 };
    pub const MINUS_ONE: Rational = Rational { num: -1, den: 1 };
    pub const HALF: Rational = Rational { num: 1, den: 2 };

    pub const fn integer(n: i64) -> Rational {
        Rational { num: n, den: 1 }
    }

    /// Builds `num/den`, or `None` when `den == 0` or the reduced value overflows `i64`.
    pub fn new(num: i64, den: i64) -> Option<Rational> {
        Self::from_i128(num as i128, den as i128)
    }

    fn from_i128(num: i128, den: i128) -> Option<Rational> {
        if den == 0 {
            return None;
        }
        let g = gcd(num, den).max(1);
        let (mut n, mut d) = (num / g, den / g);
        if d < 0 {
            n = -n;
            d = -d;
        }
        Some(Rational {
            num: i64::try_from(n).ok()?,
            den: i64::try_from(d).ok()?,
        })
    }

    pub fn numer(self) -> i64 {
        self.num
    }

    pub fn denom(self) -> i64 {
        self.den
    }

    pub fn is_zero(self) -> bool {
        self.num == 0
    }

    pub fn is_one(self) -> bool {
        self.num == 1 && self.den == 1
    }

    pub fn is_integer(self) -> bool {
        self.den == 1
    }

    pub fn is_negative(self) -> bool {
        self.num < 0
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn checked_add(self, o: Rational) -> Option<Rational> {
        let n = self.num as i128 * o.den as i128 + o.num as i128 * self.den as i128;
        Self::from_i128(n, self.den as i128 * o.den as i128)
    }

    pub fn checked_sub(self, o: Rational) -> Option<Rational> {
        self.checked_add(-o)
    }

    pub fn checked_mul(self, o: Rational) -> Option<Rational> {
        Self::from_i128(
            self.num as i128 * o.num as i128,
            self.den as i128 * o.den as i128,
        )
    }

    pub fn checked_div(self, o: Rational) -> Option<Rational> {
        Self::from_i128(
            self.num as i128 * o.den as i128,
            self.den as i128 * o.num as i128,
        )
    }

    pub fn recip(self) -> Option<Rational> {
        Self::from_i128(self.den as i128, self.num as i128)
    }

    /// Integer power. `None` on overflow or `0^negative`.
    pub fn checked_powi(self, exp: i64) -> Option<Rational> {
        let base = if exp < 0 { self.recip()? } else { self };
        let mut e = exp.unsigned_abs();
        let mut acc = Rational::ONE;
        let mut b = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.checked_mul(b)?;
            }
            e >>= 1;
            if e > 0 {
                b = b.checked_mul(b)?;
            }
        }
        Some(acc)
    }

    /// Exact `self^(p/q)` when `self >= 0` has exact `q`-th roots in numerator and denominator.
    pub fn exact_pow(self, exp: Rational) -> Option<Rational> {
        if exp.is_integer() {
            return self.checked_powi(exp.num);
        }
        if self.num < 0 {
            return None;
        }
        let q = u32::try_from(exp.den).ok()?;
        let rn = int_root(self.num as u64, q)?;
        let rd = int_root(self.den as u64, q)?;
        Rational::new(rn as i64, rd as i64)?.checked_powi(exp.num)
    }
}

fn int_root(v: u64, k: u32) -> Option<u64> {
    if v <= 1 {
        return Some(v);
    }
    let guess = libm::round(libm::pow(v as f64, 1.0 / k as f64)) as u64;
    (guess.saturating_sub(1)..=guess + 1).find(|c| c.checked_pow(k) == Some(v))
}

impl core::ops::Add for Number {
    type Output = Number;
    fn add(self, o: Number) -> Number {
        if let (Number::Rational(a), Number::Rational(b)) = (self, o) {
            if let Some(r) = a.checked_add(b) {
                return Number::Rational(r);
            }
        }
        Number::Real(self.to_f64() + o.to_f64())
    }
}

impl core::ops::Mul for Number {
    type Output = Number;
    fn mul(self, o: Number) -> Number {
        if let (Number::Rational(a), Number::Rational(b)) = (self, o) {
            if let Some(r) = a.checked_mul(b) {
                return Number::Rational(r);
            }
        }
        Number::Real(self.to_f64() * o.to_f64())
    }
}

impl core::ops::Neg for Number {
    type Output = Number;
    fn neg(self) -> Number {
        match self {
            Number::Rational(r) => Number::Rational(-r),
            Number::Real(v) => Number::Real(-v),
        }
    }
}

impl core::ops::Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational {
            num: -self.num,
            den: self.den,
        }
    }
}

impl PartialOrd for Rational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Rational {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.num as i128 * other.den as i128).cmp(&(other.num as i128 * self.den as i128))
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

/// A numeric constant: exact when possible, IEEE double otherwise.
#[derive(Clone, Copy, Debug)]
pub enum Number {
    Rational(Rational),
    Real(f64),
}

impl Number {
    pub const ZERO: Number = Number::Rational(Rational::ZERO);
    pub const ONE: Number = Number::Rational(Rational::ONE);

    pub fn int(n: i64) -> Number {
        Number::Rational(Rational::integer(n))
    }

    pub fn to_f64(self) -> f64 {
        match self {
            Number::Rational(r) => r.to_f64(),
            Number::Real(v) => v,
        }
    }

    pub fn is_zero(self) -> bool {
        match self {
            Number::Rational(r) => r.is_zero(),
            Number::Real(v) => v == 0.0,
        }
    }

    pub fn is_one(self) -> bool {
        match self {
            Number::Rational(r) => r.is_one(),
            Number::Real(v) => v == 1.0,
        }
    }

    pub fn is_negative(self) -> bool {
        match self {
            Number::Rational(r) => r.is_negative(),
            Number::Real(v) => v < 0.0,
        }
    }

    /// `1/self`, or `None` for an exact or real zero.
    pub fn recip(self) -> Option<Number> {
        match self {
            Number::Rational(r) => r.recip().map(Number::Rational),
            Number::Real(v) if v != 0.0 => Some(Number::Real(1.0 / v)),
            Number::Real(_) => None,
        }
    }

    /// `self^exp` if it can be represented without leaving the reals; `None` otherwise.
    pub fn pow(self, exp: Rational) -> Option<Number> {
        match self {
            Number::Rational(r) => {
                if r.is_zero() && exp.is_negative() {
                    return None;
                }
                r.exact_pow(exp).map(Number::Rational)
            }
            Number::Real(v) => {
                if v == 0.0 && exp.is_negative() {
                    return None;
                }
                if v < 0.0 && !exp.is_integer() {
                    return None;
                }
                let out = libm::pow(v, exp.to_f64());
                out.is_finite().then_some(Number::Real(out))
            }
        }
    }
}

impl PartialEq for Number {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Number {}

impl PartialOrd for Number {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Structural order: every rational sorts before every real.
impl Ord for Number {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Number::Rational(a), Number::Rational(b)) => a.cmp(b),
            (Number::Real(a), Number::Real(b)) => a.total_cmp(b),
            (Number::Rational(_), Number::Real(_)) => Ordering::Less,
            (Number::Real(_), Number::Rational(_)) => Ordering::Greater,
        }
    }
}

impl core::hash::Hash for Number {
    fn hash<H: core::hash::Hasher>(&self, state: &mut H) {
        match self {
            Number::Rational(r) => {
                0u8.hash(state);
                r.hash(state);
            }
            Number::Real(v) => {
                1u8.hash(state);
                v.to_bits().hash(state);
            }
        }
    }
}

impl fmt::Display for Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Number::Rational(r) => write!(f, "{r}"),
            // Debug keeps a '.' or an exponent so the literal re-parses as a real.
            Number::Real(v) => write!(f, "{v:?}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduces_and_normalizes_sign() {
        let r = Rational::new(6, -4).unwrap();
        assert_eq!((r.numer(), r.denom()), (-3, 2));
        assert!(Rational::new(1, 0).is_none());
    }

    #[test]
    fn exact_roots() {
        let r = Rational::new(9, 4).unwrap();
        assert_eq!(r.exact_pow(Rational::HALF), Rational::new(3, 2));
        assert_eq!(Rational::integer(2).exact_pow(Rational::HALF), None);
        assert_eq!(
            Rational::integer(8).exact_pow(Rational::new(-2, 3).unwrap()),
            Rational::new(1, 4)
        );
    }

    #[test]
    fn overflow_falls_back_to_real() {
        let big = Number::int(i64::MAX);
        match big * big {
            Number::Real(v) => assert!(v > 8.0e37),
            other => panic!("expected real, got {other:?}"),
        }
    }

    #[test]
    fn real_display_reparses_as_real() {
        assert_eq!(alloc::format!("{}", Number::Real(1.0)), "1.0");
        assert_eq!(alloc::format!("{}", Number::Real(1e-20)), "1e-20");
    }
}
