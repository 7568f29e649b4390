//! Truncated formal series `sum_e c_e q^e` with exponents in `offset + (1/N) Z`.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

use num::{One, ToPrimitive, Zero};
use num_complex::Complex64;
use serde_json::{json, Value};

use crate::cyclo::Cyclo;
use crate::error::{Error, Result};
use crate::rational::{denom_u64, format_rational, int, parse_rational, to_f64, Rational};

static MAX_DEN: AtomicU64 = AtomicU64::new(0);

/// Cap on exponent denominators. Defaults to 10^6, overridable through the
/// `VOATHETA_MAX_DEN` environment variable or [`set_max_denominator`].
pub fn max_denominator() -> u64 {
    let v = MAX_DEN.load(Ordering::Relaxed);
    if v != 0 {
        return v;
    }
    let v = std::env::var("VOATHETA_MAX_DEN")
        .ok()
        .and_then(|s| s.parse::<u64>().ok())
        .filter(|&v| v > 0)
        .unwrap_or(1_000_000);
    MAX_DEN.store(v, Ordering::Relaxed);
    v
}

pub fn set_max_denominator(v: u64) {
    MAX_DEN.store(v.max(1), Ordering::Relaxed);
}

/// Coefficient ring of a series.
pub trait Coeff: Clone + fmt::Debug + PartialEq + Send + Sync {
    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    fn scale(&self, r: &Rational) -> Self;
    fn unit_inverse(&self) -> Option<Self>;
    fn to_complex(&self) -> Complex64;
    fn to_json(&self) -> Value;
    fn from_json(v: &Value) -> Result<Self>;
}

impl Coeff for Cyclo {
    fn zero() -> Self {
        Cyclo::zero()
    }
    fn one() -> Self {
        Cyclo::one()
    }
    fn is_zero(&self) -> bool {
        Cyclo::is_zero(self)
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn scale(&self, r: &Rational) -> Self {
        Cyclo::scale(self, r)
    }
    fn unit_inverse(&self) -> Option<Self> {
        Cyclo::unit_inverse(self)
    }
    fn to_complex(&self) -> Complex64 {
        Cyclo::to_complex(self)
    }
    fn to_json(&self) -> Value {
        Value::Array(
            self.terms()
                .map(|(a, c)| json!([format_rational(c), format!("{}/{}", a.numer(), a.denom())]))
                .collect(),
        )
    }
    fn from_json(v: &Value) -> Result<Self> {
        let arr = v
            .as_array()
            .ok_or_else(|| Error::Parse("coefficient must be a list of [c, r] pairs".into()))?;
        let mut out = Cyclo::zero();
        for t in arr {
            let pair = t.as_array().filter(|p| p.len() == 2).ok_or_else(|| {
                Error::Parse("coefficient term must be a [c, r] pair".into())
            })?;
            let c = parse_rational(json_str(&pair[0])?)?;
            let r = parse_rational(json_str(&pair[1])?)?;
            out += &Cyclo::zeta_of(&r).scale(&c);
        }
        Ok(out)
    }
}

impl Coeff for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn scale(&self, r: &Rational) -> Self {
        self * to_f64(r)
    }
    fn unit_inverse(&self) -> Option<Self> {
        (!Coeff::is_zero(self)).then(|| self.inv())
    }
    fn to_complex(&self) -> Complex64 {
        *self
    }
    fn to_json(&self) -> Value {
        complex_to_json(*self)
    }
    fn from_json(v: &Value) -> Result<Self> {
        complex_from_json(v)
    }
}

pub(crate) fn json_str(v: &Value) -> Result<&str> {
    v.as_str().ok_or_else(|| Error::Parse(format!("expected string, got {v}")))
}

pub fn complex_to_json(z: Complex64) -> Value {
    json!([format!("{:e}", z.re), format!("{:e}", z.im)])
}

pub fn complex_from_json(v: &Value) -> Result<Complex64> {
    let pair = v
        .as_array()
        .filter(|p| p.len() == 2)
        .ok_or_else(|| Error::Parse("complex number must be [re, im]".into()))?;
    let parse = |x: &Value| -> Result<f64> {
        match x {
            Value::String(s) => s.trim().parse().map_err(|_| Error::Parse(format!("bad float {s:?}"))),
            Value::Number(n) => n.as_f64().ok_or_else(|| Error::Parse("bad float".into())),
            _ => Err(Error::Parse("bad float".into())),
        }
    };
    Ok(Complex64::new(parse(&pair[0])?, parse(&pair[1])?))
}

/// Coefficient growth model `|c_e| <= C rho^e`, used to bound evaluation tails.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GrowthBudget {
    pub constant: f64,
    pub ratio: f64,
}

impl GrowthBudget {
    pub fn new(constant: f64, ratio: f64) -> Self {
        Self { constant, ratio }
    }

    /// Budget dominating a nondecreasing coefficient bound `f` with ratio `rho`.
    /// The constant is the maximum of `f(e + h) / rho^e` over a grid of step h.
    pub fn dominating(f: impl Fn(f64) -> f64, rho: f64) -> Self {
        let h = 0.25;
        let mut c: f64 = 0.0;
        let mut e = -1.0;
        while e <= 20000.0 {
            let v = f(e + h).ln() - e * rho.ln();
            c = c.max(v);
            e += h;
        }
        Self { constant: c.exp(), ratio: rho }
    }
}

/// Result of evaluating a truncated series.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Evaluation {
    pub value: Complex64,
    pub tail_bound: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Series<C: Coeff> {
    den: u64,
    offset: Rational,
    trunc: Rational,
    coeffs: Vec<C>,
}

pub type QSeries = Series<Cyclo>;
pub type FloatSeries = Series<Complex64>;

fn check_den(n: u64) -> Result<u64> {
    let cap = max_denominator();
    if n > cap {
        Err(Error::DenominatorCapExceeded(n, cap))
    } else {
        Ok(n)
    }
}

/// Sums and products of admissible series panic if the joint denominator passes the cap.
fn lcm_den(a: u64, b: u64) -> u64 {
    let n = num::integer::lcm(a, b);
    check_den(n).unwrap_or_else(|e| panic!("{e}"))
}

impl<C: Coeff> Series<C> {
    /// The zero series known to `O(q^trunc)`.
    pub fn zero(trunc: Rational) -> Self {
        let den = denom_u64(&trunc);
        Series { den, offset: trunc.clone(), trunc, coeffs: Vec::new() }
    }

    pub fn one(trunc: Rational) -> Self {
        Self::monomial(C::one(), Rational::zero(), trunc)
    }

    pub fn monomial(c: C, e: Rational, trunc: Rational) -> Self {
        Self::from_terms(vec![(e, c)], trunc).expect("monomial denominators within cap")
    }

    /// Builds a series from (exponent, coefficient) pairs; terms at or above
    /// `trunc` are dropped and repeated exponents are summed.
    pub fn from_terms(terms: Vec<(Rational, C)>, trunc: Rational) -> Result<Self> {
        let mut den = denom_u64(&trunc);
        for (e, _) in &terms {
            den = num::integer::lcm(den, denom_u64(e));
            check_den(den)?;
        }
        check_den(den)?;
        let kept: Vec<_> = terms.into_iter().filter(|(e, c)| *e < trunc && !c.is_zero()).collect();
        let Some(min) = kept.iter().map(|(e, _)| e.clone()).min() else {
            let mut z = Self::zero(trunc);
            z.den = den;
            return Ok(z);
        };
        let len = index_of(&min, &trunc, den);
        let mut coeffs = vec![C::zero(); len];
        for (e, c) in kept {
            let i = index_of(&min, &e, den);
            coeffs[i] = coeffs[i].add(&c);
        }
        let mut s = Series { den, offset: min, trunc, coeffs };
        s.normalize();
        Ok(s)
    }

    pub fn den(&self) -> u64 {
        self.den
    }

    pub fn offset(&self) -> &Rational {
        &self.offset
    }

    pub fn trunc(&self) -> &Rational {
        &self.trunc
    }

    pub fn coeffs(&self) -> &[C] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn exponent(&self, i: usize) -> Rational {
        &self.offset + Rational::new((i as i64).into(), (self.den as i64).into())
    }

    /// Nonzero (exponent, coefficient) pairs in increasing exponent order.
    pub fn terms(&self) -> impl Iterator<Item = (Rational, &C)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| (self.exponent(i), c))
    }

    /// Coefficient of `q^e`; `None` when `e >= trunc`.
    pub fn coefficient(&self, e: &Rational) -> Option<C> {
        if *e >= self.trunc {
            return None;
        }
        if *e < self.offset {
            return Some(C::zero());
        }
        let t = (e - &self.offset) * int(self.den as i64);
        if !t.is_integer() {
            return Some(C::zero());
        }
        let i = t.to_integer().to_usize().unwrap();
        Some(self.coeffs.get(i).cloned().unwrap_or_else(C::zero))
    }

    fn normalize(&mut self) {
        let lead = self.coeffs.iter().position(|c| !c.is_zero());
        match lead {
            None => {
                self.coeffs.clear();
                self.offset = self.trunc.clone();
            }
            Some(k) => {
                if k > 0 {
                    self.coeffs.drain(..k);
                    self.offset = self.exponent_from(k);
                }
                while self.coeffs.last().is_some_and(|c| c.is_zero()) {
                    self.coeffs.pop();
                }
            }
        }
    }

    fn exponent_from(&self, i: usize) -> Rational {
        self.exponent(i)
    }

    fn dense(&self, den: u64, offset: &Rational, len: usize) -> Vec<C> {
        let mut out = vec![C::zero(); len];
        let step = den / self.den;
        let base = if self.coeffs.is_empty() { 0 } else { index_of(offset, &self.offset, den) };
        for (i, c) in self.coeffs.iter().enumerate() {
            let j = base + i * step as usize;
            if j < len {
                out[j] = c.clone();
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let den = lcm_den(self.den, other.den);
        let trunc = (&self.trunc).min(&other.trunc).clone();
        let offset = (&self.offset).min(&other.offset).clone().min(trunc.clone());
        let len = index_of(&offset, &trunc, den);
        let a = self.dense(den, &offset, len);
        let b = other.dense(den, &offset, len);
        let coeffs = a.iter().zip(&b).map(|(x, y)| x.add(y)).collect();
        let mut s = Series { den, offset, trunc, coeffs };
        s.normalize();
        s
    }

    pub fn neg(&self) -> Self {
        Series { coeffs: self.coeffs.iter().map(|c| c.neg()).collect(), ..self.clone() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn scale(&self, r: &Rational) -> Self {
        let mut s = Series { coeffs: self.coeffs.iter().map(|c| c.scale(r)).collect(), ..self.clone() };
        s.normalize();
        s
    }

    pub fn scale_by(&self, c: &C) -> Self {
        let mut s = Series { coeffs: self.coeffs.iter().map(|x| x.mul(c)).collect(), ..self.clone() };
        s.normalize();
        s
    }

    pub fn mul(&self, other: &Self) -> Self {
        let den = lcm_den(self.den, other.den);
        let offset = &self.offset + &other.offset;
        let trunc = (&self.offset + &other.trunc).min(&other.offset + &self.trunc);
        if self.is_zero() || other.is_zero() {
            let mut z = Self::zero(trunc);
            z.den = den;
            return z;
        }
        let len = index_of(&offset, &trunc, den);
        let sa = (den / self.den) as usize;
        let sb = (den / other.den) as usize;
        let mut coeffs = vec![C::zero(); len];
        let bn: Vec<(usize, &C)> =
            other.coeffs.iter().enumerate().filter(|(_, c)| !c.is_zero()).map(|(j, c)| (j * sb, c)).collect();
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            let ia = i * sa;
            if ia >= len {
                break;
            }
            for (jb, b) in &bn {
                let k = ia + jb;
                if k >= len {
                    break;
                }
                coeffs[k] = coeffs[k].add(&a.mul(b));
            }
        }
        let mut s = Series { den, offset, trunc, coeffs };
        s.normalize();
        s
    }

    /// Multiplicative inverse; the leading coefficient must be a unit.
    pub fn invert(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::NonInvertibleLeadingTerm("zero series".into()));
        }
        let lead_inv = self.coeffs[0]
            .unit_inverse()
            .ok_or_else(|| Error::NonInvertibleLeadingTerm(format!("{:?}", self.coeffs[0])))?;
        let offset = -self.offset.clone();
        let trunc = &self.trunc - &self.offset * int(2);
        let len = index_of(&offset, &trunc, self.den);
        let mut inv: Vec<C> = Vec::with_capacity(len);
        for n in 0..len {
            if n == 0 {
                inv.push(lead_inv.clone());
                continue;
            }
            let mut acc = C::zero();
            for k in 1..=n.min(self.coeffs.len() - 1) {
                let a = &self.coeffs[k];
                if a.is_zero() || inv[n - k].is_zero() {
                    continue;
                }
                acc = acc.add(&a.mul(&inv[n - k]));
            }
            inv.push(acc.mul(&lead_inv).neg());
        }
        let mut s = Series { den: self.den, offset, trunc, coeffs: inv };
        s.normalize();
        Ok(s)
    }

    pub fn pow_int(&self, k: i64) -> Result<Self> {
        if k < 0 {
            return self.invert()?.pow_int(-k);
        }
        // truncation of the identity must not limit the product
        let mut base = self.clone();
        let mut acc: Option<Self> = None;
        let mut e = k;
        while e > 0 {
            if e & 1 == 1 {
                acc = Some(match acc {
                    None => base.clone(),
                    Some(a) => a.mul(&base),
                });
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        Ok(acc.unwrap_or_else(|| {
            let rel = &self.trunc - &self.offset;
            Self::one(rel)
        }))
    }

    /// `q d/dq`: each coefficient is multiplied by its exponent.
    pub fn q_derivative(&self) -> Self {
        let mut s = self.clone();
        for (i, c) in s.coeffs.iter_mut().enumerate() {
            let e = &self.offset + Rational::new((i as i64).into(), (self.den as i64).into());
            *c = c.scale(&e);
        }
        s.normalize();
        s
    }

    /// Multiply by `q^e`.
    pub fn shift(&self, e: &Rational) -> Result<Self> {
        let den = check_den(num::integer::lcm(self.den, denom_u64(e)))?;
        let mut s = self.refined(den);
        s.offset += e;
        s.trunc += e;
        Ok(s)
    }

    fn refined(&self, den: u64) -> Self {
        if den == self.den {
            return self.clone();
        }
        let len = index_of(&self.offset, &self.trunc, den);
        let coeffs = self.dense(den, &self.offset, len);
        let mut s = Series { den, offset: self.offset.clone(), trunc: self.trunc.clone(), coeffs };
        s.normalize();
        s
    }

    /// Drop every term with exponent `>= order` (no-op if already coarser).
    pub fn truncate(&self, order: &Rational) -> Self {
        if *order >= self.trunc {
            return self.clone();
        }
        let terms = self.terms().map(|(e, c)| (e, c.clone())).collect();
        let mut s = Self::from_terms(terms, order.clone()).expect("denominators already within cap");
        if s.den % self.den != 0 {
            s = s.refined(lcm_den(s.den, self.den));
        }
        s
    }

    pub fn map<D: Coeff>(&self, f: impl Fn(&C) -> D) -> Series<D> {
        let mut s = Series {
            den: self.den,
            offset: self.offset.clone(),
            trunc: self.trunc.clone(),
            coeffs: self.coeffs.iter().map(f).collect(),
        };
        s.normalize();
        s
    }

    pub fn to_float(&self) -> FloatSeries {
        self.map(|c| c.to_complex())
    }

    /// Numerical value at `tau` with a rigorous tail bound derived from `budget`.
    pub fn evaluate(&self, tau: Complex64, budget: &GrowthBudget) -> Result<Evaluation> {
        if tau.im <= 0.0 {
            return Err(Error::NotInUpperHalfPlane(format!("{tau}")));
        }
        let two_pi_i = Complex64::new(0.0, 2.0 * std::f64::consts::PI);
        let mut value = Complex64::new(0.0, 0.0);
        for (e, c) in self.terms() {
            value += c.to_complex() * (two_pi_i * tau * to_f64(&e)).exp();
        }
        let absq = (-2.0 * std::f64::consts::PI * tau.im).exp();
        let x = budget.ratio * absq;
        let tail_bound = if x >= 1.0 {
            f64::INFINITY
        } else {
            let t = to_f64(&self.trunc);
            budget.constant * x.powf(t) / (1.0 - x.powf(1.0 / self.den as f64))
        };
        Ok(Evaluation { value, tail_bound })
    }

    pub fn to_json(&self) -> Value {
        json!({
            "den": self.den,
            "offset": format_rational(&self.offset),
            "trunc": format_rational(&self.trunc),
            "coeffs": self.coeffs.iter().map(|c| c.to_json()).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let den = v["den"].as_u64().filter(|&d| d > 0).ok_or_else(|| Error::Parse("den".into()))?;
        let offset = parse_rational(json_str(&v["offset"])?)?;
        let trunc = parse_rational(json_str(&v["trunc"])?)?;
        let coeffs = v["coeffs"].as_array().ok_or_else(|| Error::Parse("coeffs".into()))?;
        let step = Rational::new(1.into(), (den as i64).into());
        let mut terms = Vec::new();
        for (i, c) in coeffs.iter().enumerate() {
            terms.push((&offset + &step * int(i as i64), C::from_json(c)?));
        }
        let mut s = Self::from_terms(terms, trunc)?;
        if den % s.den == 0 {
            s = s.refined(check_den(den)?);
        }
        Ok(s)
    }
}

impl QSeries {
    /// Exact action of `tau -> tau + 1`: the coefficient of `q^e` picks up `zeta(e)`.
    pub fn translate_tau(&self) -> QSeries {
        let mut s = self.clone();
        for (i, c) in s.coeffs.iter_mut().enumerate() {
            let e = &self.offset + Rational::new((i as i64).into(), (self.den as i64).into());
            *c = c.rotate_by(&e);
        }
        s
    }

    pub fn from_integers(coeffs: &[i64], offset: Rational, den: u64, trunc: Rational) -> Result<Self> {
        let step = Rational::new(1.into(), (den as i64).into());
        let terms = coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| (&offset + &step * int(i as i64), Cyclo::from_int(c)))
            .collect();
        Self::from_terms(terms, trunc)
    }
}

fn index_of(base: &Rational, e: &Rational, den: u64) -> usize {
    let t = (e - base) * int(den as i64);
    debug_assert!(t.is_integer(), "exponent off the grid");
    t.to_integer().to_usize().expect("negative index")
}

impl<C: Coeff + fmt::Display> fmt::Display for Series<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (e, c) in self.terms() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let cs = c.to_string();
            let cs = if cs.contains(' ') { format!("({cs})") } else { cs };
            if e.is_zero() {
                write!(f, "{cs}")?;
            } else if e.is_one() {
                write!(f, "{cs}*q")?;
            } else {
                write!(f, "{cs}*q^({})", format_rational(&e))?;
            }
        }
        if !first {
            write!(f, " + ")?;
        }
        write!(f, "O(q^({}))", format_rational(&self.trunc))
    }
}

/// Largest absolute coefficient bound (used in reports).
pub fn max_abs_coeff(s: &QSeries) -> f64 {
    s.coeffs().iter().map(|c| c.abs_bound()).fold(0.0, f64::max)
}
