//! Exact coefficients in Q(zeta_N): finite sums of rational multiples of
//! roots of unity `zeta(r) = exp(2 pi i r)` with `r` rational.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num::rational::Ratio;
use num::{Integer, One, Signed, Zero};
use num_complex::Complex64;
use once_cell::sync::Lazy;
use parking_lot::Mutex;

use crate::rational::{format_rational, to_f64, Rational};

pub type Angle = Ratio<i64>;

/// Element of Q(zeta). Angles are kept in [0, 1/2) using zeta(r + 1/2) = -zeta(r);
/// elements with three or more terms are reduced modulo the cyclotomic
/// polynomial, so a value is zero exactly when it has no terms. Representations
/// are not unique, so equality compares the difference with zero.
#[derive(Clone, Default)]
pub struct Cyclo {
    terms: BTreeMap<Angle, Rational>,
}

static CYCLOTOMIC: Lazy<Mutex<HashMap<i64, Vec<i64>>>> = Lazy::new(|| Mutex::new(HashMap::new()));

/// Coefficients (constant term first) of the n-th cyclotomic polynomial.
pub fn cyclotomic_poly(n: i64) -> Vec<i64> {
    assert!(n >= 1);
    if let Some(p) = CYCLOTOMIC.lock().get(&n) {
        return p.clone();
    }
    // x^n - 1 divided by Phi_d for proper divisors d
    let mut num = vec![0i64; n as usize + 1];
    num[0] = -1;
    num[n as usize] = 1;
    for d in 1..n {
        if n % d == 0 {
            let div = cyclotomic_poly(d);
            num = poly_div_exact(&num, &div);
        }
    }
    CYCLOTOMIC.lock().insert(n, num.clone());
    num
}

fn poly_div_exact(num: &[i64], den: &[i64]) -> Vec<i64> {
    let mut rem = num.to_vec();
    let dd = den.len() - 1;
    let qd = rem.len() - 1 - dd;
    let mut quo = vec![0i64; qd + 1];
    for k in (0..=qd).rev() {
        let c = rem[k + dd] / den[dd];
        quo[k] = c;
        for (j, dj) in den.iter().enumerate() {
            rem[k + j] -= c * dj;
        }
    }
    debug_assert!(rem.iter().all(|&c| c == 0));
    quo
}

fn normalize_angle(a: Angle) -> Angle {
    let f = a - a.floor();
    debug_assert!(f >= Angle::zero() && f < Angle::one());
    f
}

impl Cyclo {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::from_rational(Rational::one())
    }

    pub fn from_rational(c: Rational) -> Self {
        Self::term(c, Angle::zero())
    }

    pub fn from_int(n: i64) -> Self {
        Self::from_rational(Rational::from_integer(n.into()))
    }

    /// `zeta(r) = exp(2 pi i r)`.
    pub fn zeta(r: Angle) -> Self {
        Self::term(Rational::one(), r)
    }

    /// `zeta` of a big rational angle; the angle is reduced mod 1 first.
    pub fn zeta_of(r: &Rational) -> Self {
        Self::zeta(angle_from_rational(r))
    }

    pub fn term(c: Rational, r: Angle) -> Self {
        let mut out = Self::zero();
        out.push(c, r);
        out
    }

    fn push(&mut self, c: Rational, r: Angle) {
        if c.is_zero() {
            return;
        }
        let mut r = normalize_angle(r);
        let mut c = c;
        let half = Angle::new(1, 2);
        if r >= half {
            r -= half;
            c = -c;
        }
        let entry = self.terms.entry(r).or_insert_with(Rational::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&r);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.as_rational().is_some_and(|r| r.is_one())
    }

    /// Rational value if the element lies in Q.
    pub fn as_rational(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => {
                let (a, c) = self.terms.iter().next().unwrap();
                a.is_zero().then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Angle, &Rational)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    fn conductor(&self) -> i64 {
        self.terms.keys().fold(2, |acc, a| acc.lcm(a.denom()))
    }

    /// Reduce modulo Phi_N so that linear dependencies among roots of unity cancel.
    fn reduce(&mut self) {
        if self.terms.len() < 3 {
            return;
        }
        let n = self.conductor();
        let phi = cyclotomic_poly(n);
        let deg = phi.len() - 1;
        let mut poly: Vec<Rational> = vec![Rational::zero(); n as usize];
        for (a, c) in &self.terms {
            let idx = (a.numer() * (n / a.denom())) as usize;
            poly[idx] += c;
        }
        for k in (deg..n as usize).rev() {
            if poly[k].is_zero() {
                continue;
            }
            let c = std::mem::replace(&mut poly[k], Rational::zero());
            for (j, pj) in phi.iter().enumerate().take(deg) {
                if *pj != 0 {
                    poly[k - deg + j] -= &c * Rational::from_integer((*pj).into());
                }
            }
        }
        let mut out = Cyclo::zero();
        for (k, c) in poly.into_iter().enumerate().take(deg) {
            out.push(c, Angle::new(k as i64, n));
        }
        *self = out;
    }

    pub fn scale(&self, r: &Rational) -> Self {
        if r.is_zero() {
            return Self::zero();
        }
        Cyclo {
            terms: self.terms.iter().map(|(a, c)| (*a, c * r)).collect(),
        }
    }

    /// Multiply by `zeta(r)`.
    pub fn rotate(&self, r: Angle) -> Self {
        let mut out = Self::zero();
        for (a, c) in &self.terms {
            out.push(c.clone(), *a + r);
        }
        out
    }

    pub fn rotate_by(&self, r: &Rational) -> Self {
        self.rotate(angle_from_rational(r))
    }

    /// Inverse of a single-term element `c zeta(r)`.
    pub fn unit_inverse(&self) -> Option<Self> {
        if self.terms.len() != 1 {
            return None;
        }
        let (a, c) = self.terms.iter().next().unwrap();
        Some(Self::term(c.recip(), -*a))
    }

    pub fn to_complex(&self) -> Complex64 {
        self.terms
            .iter()
            .map(|(a, c)| {
                let theta = 2.0 * std::f64::consts::PI * (*a.numer() as f64) / (*a.denom() as f64);
                Complex64::from_polar(to_f64(c), theta)
            })
            .sum()
    }

    /// Upper bound on the absolute value.
    pub fn abs_bound(&self) -> f64 {
        self.terms.values().map(|c| to_f64(c).abs()).sum()
    }

    /// Complex conjugate.
    pub fn conj(&self) -> Self {
        let mut out = Self::zero();
        for (a, c) in &self.terms {
            out.push(c.clone(), -*a);
        }
        out
    }
}

impl PartialEq for Cyclo {
    fn eq(&self, other: &Self) -> bool {
        self.terms == other.terms || (self - other).is_zero()
    }
}

impl Eq for Cyclo {}

pub fn angle_from_rational(r: &Rational) -> Angle {
    let f = crate::rational::frac(r);
    let n: i64 = num::ToPrimitive::to_i64(f.numer()).expect("angle numerator too large");
    let d: i64 = num::ToPrimitive::to_i64(f.denom()).expect("angle denominator too large");
    Angle::new(n, d)
}

impl Add for &Cyclo {
    type Output = Cyclo;
    fn add(self, rhs: &Cyclo) -> Cyclo {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl AddAssign<&Cyclo> for Cyclo {
    fn add_assign(&mut self, rhs: &Cyclo) {
        for (a, c) in &rhs.terms {
            self.push(c.clone(), *a);
        }
        self.reduce();
    }
}

impl Sub for &Cyclo {
    type Output = Cyclo;
    fn sub(self, rhs: &Cyclo) -> Cyclo {
        let mut out = self.clone();
        for (a, c) in &rhs.terms {
            out.push(-c.clone(), *a);
        }
        out.reduce();
        out
    }
}

impl Neg for &Cyclo {
    type Output = Cyclo;
    fn neg(self) -> Cyclo {
        Cyclo {
            terms: self.terms.iter().map(|(a, c)| (*a, -c.clone())).collect(),
        }
    }
}

impl Mul for &Cyclo {
    type Output = Cyclo;
    fn mul(self, rhs: &Cyclo) -> Cyclo {
        let mut out = Cyclo::zero();
        for (a, c) in &self.terms {
            for (b, d) in &rhs.terms {
                out.push(c * d, *a + *b);
            }
        }
        out.reduce();
        out
    }
}

impl fmt::Display for Cyclo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (a, c) in &self.terms {
            let (sign, mag) = if c.is_negative() { ("-", -c.clone()) } else { ("+", c.clone()) };
            if first {
                if sign == "-" {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            first = false;
            if a.is_zero() {
                write!(f, "{}", format_rational(&mag))?;
            } else if mag.is_one() {
                write!(f, "z({a})")?;
            } else {
                write!(f, "{}*z({a})", format_rational(&mag))?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Cyclo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Cyclo({self})")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    #[test]
    fn cyclotomic_polynomials() {
        assert_eq!(cyclotomic_poly(1), vec![-1, 1]);
        assert_eq!(cyclotomic_poly(4), vec![1, 0, 1]);
        assert_eq!(cyclotomic_poly(6), vec![1, -1, 1]);
        assert_eq!(cyclotomic_poly(12), vec![1, 0, -1, 0, 1]);
    }

    #[test]
    fn half_turn_is_minus_one() {
        assert_eq!(Cyclo::zeta(Angle::new(1, 2)), Cyclo::from_int(-1));
    }

    #[test]
    fn sum_of_cube_roots_vanishes() {
        let mut s = Cyclo::one();
        s += &Cyclo::zeta(Angle::new(1, 3));
        s += &Cyclo::zeta(Angle::new(2, 3));
        assert!(s.is_zero());
    }

    #[test]
    fn sixth_minus_third_is_one() {
        let d = &Cyclo::zeta(Angle::new(1, 6)) - &Cyclo::zeta(Angle::new(1, 3));
        assert_eq!(d, Cyclo::one());
    }

    #[test]
    fn numeric_value_matches_exact() {
        let mut x = Cyclo::zeta(Angle::new(1, 8)).scale(&rat(3, 2));
        x += &Cyclo::zeta(Angle::new(5, 12));
        x += &Cyclo::from_int(2);
        let y = &x * &x.conj();
        let z = y.to_complex();
        assert!((z.re - x.to_complex().norm_sqr()).abs() < 1e-12);
        assert!(z.im.abs() < 1e-12);
    }
}
