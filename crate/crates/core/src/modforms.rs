//! Dedekind eta, Eisenstein series, Weierstrass functions and their
//! modular transformation checks.

use std::collections::HashMap;
use std::f64::consts::PI;

use num::{BigInt, One, ToPrimitive, Zero};
use num_complex::Complex64;
use once_cell::sync::Lazy;
use parking_lot::Mutex;
use serde::Serialize;

use crate::cyclo::Cyclo;
use crate::error::{Error, Result};
use crate::qseries::{Evaluation, GrowthBudget, QSeries};
use crate::rational::{binomial, ceil_i64, factorial, int, rat, to_f64, Rational};

/// Element of SL(2, Z) acting by `tau -> (a tau + b) / (c tau + d)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Sl2 {
    pub a: i64,
    pub b: i64,
    pub c: i64,
    pub d: i64,
}

impl Sl2 {
    pub fn new(a: i64, b: i64, c: i64, d: i64) -> Result<Self> {
        let det = a * d - b * c;
        if det != 1 {
            return Err(Error::NotInSl2(det));
        }
        Ok(Sl2 { a, b, c, d })
    }

    pub const IDENTITY: Sl2 = Sl2 { a: 1, b: 0, c: 0, d: 1 };
    pub const S: Sl2 = Sl2 { a: 0, b: -1, c: 1, d: 0 };
    pub const T: Sl2 = Sl2 { a: 1, b: 1, c: 0, d: 1 };

    pub fn st() -> Sl2 {
        Sl2::S.compose(&Sl2::T)
    }

    /// Matrix product `self * other`.
    pub fn compose(&self, o: &Sl2) -> Sl2 {
        Sl2 {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }

    pub fn act(&self, tau: Complex64) -> Complex64 {
        (tau * self.a as f64 + self.b as f64) / (tau * self.c as f64 + self.d as f64)
    }

    /// Automorphy factor `c tau + d`.
    pub fn j(&self, tau: Complex64) -> Complex64 {
        tau * self.c as f64 + self.d as f64
    }

    pub fn parse(name: &str) -> Result<Sl2> {
        match name {
            "S" => Ok(Sl2::S),
            "T" => Ok(Sl2::T),
            "ST" => Ok(Sl2::st()),
            "I" => Ok(Sl2::IDENTITY),
            other => {
                let parts: Vec<i64> = other
                    .split(',')
                    .map(|p| p.trim().parse::<i64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| Error::Parse(format!("bad SL2 element {other:?}")))?;
                if parts.len() != 4 {
                    return Err(Error::Parse(format!("bad SL2 element {other:?}")));
                }
                Sl2::new(parts[0], parts[1], parts[2], parts[3])
            }
        }
    }
}

/// Outcome of comparing the two sides of a transformation law at one point.
#[derive(Clone, Debug, Serialize)]
pub struct TransformReport {
    pub label: String,
    pub rho: Sl2,
    #[serde(serialize_with = "ser_c")]
    pub tau: Complex64,
    #[serde(serialize_with = "ser_c")]
    pub lhs: Complex64,
    #[serde(serialize_with = "ser_c")]
    pub rhs: Complex64,
    pub residual: f64,
    pub tail_budget: f64,
    pub tolerance: f64,
    pub pass: bool,
}

pub(crate) fn ser_c<S: serde::Serializer>(z: &Complex64, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(2))?;
    seq.serialize_element(&format!("{:e}", z.re))?;
    seq.serialize_element(&format!("{:e}", z.im))?;
    seq.end()
}

impl TransformReport {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        label: impl Into<String>,
        rho: Sl2,
        tau: Complex64,
        lhs: Complex64,
        rhs: Complex64,
        tail_budget: f64,
        tolerance: f64,
    ) -> Result<Self> {
        if !(tail_budget <= tolerance) {
            return Err(Error::TailBoundExceeded { bound: tail_budget, tolerance });
        }
        let residual = (lhs - rhs).norm();
        Ok(TransformReport {
            label: label.into(),
            rho,
            tau,
            lhs,
            rhs,
            residual,
            tail_budget,
            tolerance,
            pass: residual + tail_budget < tolerance,
        })
    }
}

pub(crate) fn check_tau(tau: Complex64) -> Result<()> {
    if tau.im > 0.0 && tau.re.is_finite() {
        Ok(())
    } else {
        Err(Error::NotInUpperHalfPlane(format!("{tau}")))
    }
}

static BERNOULLI: Lazy<Mutex<Vec<Rational>>> = Lazy::new(|| Mutex::new(vec![Rational::one()]));

/// Bernoulli number `B_n` with `B_1 = -1/2`.
pub fn bernoulli(n: usize) -> Rational {
    let mut cache = BERNOULLI.lock();
    while cache.len() <= n {
        let m = cache.len();
        // sum_{k<=m} binom(m+1, k) B_k = 0
        let mut acc = Rational::zero();
        for (k, b) in cache.iter().enumerate() {
            acc += b * binomial(&int(m as i64 + 1), k as u64);
        }
        cache.push(-acc / int(m as i64 + 1));
    }
    cache[n].clone()
}

pub fn divisor_sigma(k: u32, n: u64) -> BigInt {
    let mut s = BigInt::zero();
    let mut d = 1u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            s += BigInt::from(d).pow(k);
            let e = n / d;
            if e != d {
                s += BigInt::from(e).pow(k);
            }
        }
        d += 1;
    }
    s
}

/// `prod_{n>=1} (1 - q^n)` to relative order `len` (terms `q^0 .. q^{len-1}`).
fn euler_product(len: i64) -> QSeries {
    let mut c = vec![BigInt::zero(); len.max(0) as usize];
    if !c.is_empty() {
        c[0] = BigInt::one();
    }
    for n in 1..len as usize {
        for k in (n..c.len()).rev() {
            let t = c[k - n].clone();
            c[k] -= t;
        }
    }
    let terms = c
        .into_iter()
        .enumerate()
        .map(|(i, v)| (int(i as i64), Cyclo::from_rational(Rational::from_integer(v))))
        .collect();
    QSeries::from_terms(terms, int(len.max(0))).expect("integer exponents")
}

/// `eta(tau) = q^{1/24} prod (1 - q^n)`, truncated at `q^order`.
pub fn dedekind_eta(order: &Rational) -> Result<QSeries> {
    eta_power(1, order)
}

/// `eta^k` truncated at `q^order` (exact exponents `k/24 + n`).
pub fn eta_power(k: i64, order: &Rational) -> Result<QSeries> {
    let off = rat(k, 24);
    if *order <= off {
        return Err(Error::Parse(format!("order must exceed {k}/24")));
    }
    let rel = order - &off;
    let len = ceil_i64(&rel);
    let p = euler_product(len);
    let pk = p.pow_int(k)?;
    Ok(pk.shift(&off)?.truncate(order))
}

/// Coefficient budget for `eta^k`.
pub fn eta_budget(k: i64) -> GrowthBudget {
    if k == 1 || k == 0 {
        return GrowthBudget::new(1.0, 1.0);
    }
    let a = k.unsigned_abs() as f64;
    GrowthBudget::dominating(|e| (PI * (2.0 * a * (e + 1.0).max(0.0) / 3.0).sqrt()).exp(), std::f64::consts::E)
}

/// Normalized Eisenstein series
/// `E_k = -B_k / k! + 2/(k-1)! sum sigma_{k-1}(n) q^n`, with `G_k = (2 pi i)^k E_k`.
pub fn eisenstein_e(k: i64, order: &Rational) -> Result<QSeries> {
    if k < 4 || k % 2 != 0 {
        return Err(Error::OddOrSmallWeight(k));
    }
    Ok(eisenstein_any(k as u32, order))
}

/// Same normalization, also allowing `k = 2` (quasimodular).
pub fn eisenstein_any(k: u32, order: &Rational) -> QSeries {
    let mut terms = vec![(int(0), Cyclo::from_rational(-bernoulli(k as usize) / Rational::from_integer(factorial(k as u64))))];
    let pref = Rational::new(BigInt::from(2), factorial(k as u64 - 1));
    let top = ceil_i64(order);
    for n in 1..top.max(1) {
        let s = Rational::from_integer(divisor_sigma(k - 1, n as u64));
        terms.push((int(n), Cyclo::from_rational(&pref * s)));
    }
    QSeries::from_terms(terms, order.clone()).expect("integer exponents")
}

pub fn eisenstein_budget(k: u32) -> GrowthBudget {
    let constant = to_f64(&bernoulli(k as usize)).abs() / factorial(k as u64).to_f64().unwrap();
    let lead = 2.0 * zeta_real(k as f64 - 1.0) / factorial(k as u64 - 1).to_f64().unwrap();
    GrowthBudget::dominating(move |n| constant.max(lead * n.max(1.0).powi(k as i32 - 1)), std::f64::consts::E)
}

/// Riemann zeta at real `s > 1` (upper estimate via integral tail).
fn zeta_real(s: f64) -> f64 {
    if s <= 1.0 {
        return f64::INFINITY;
    }
    let n = 1000;
    let partial: f64 = (1..=n).map(|k| (k as f64).powf(-s)).sum();
    partial + (n as f64).powf(1.0 - s) / (s - 1.0)
}

pub fn two_pi_i_pow(p: i32) -> Complex64 {
    Complex64::new(0.0, 2.0 * PI).powi(p)
}

/// One z-power of a Weierstrass expansion: `(2 pi i)^token * series(tau) * z^power`.
#[derive(Clone, Debug, PartialEq)]
pub struct WpTerm {
    pub power: i64,
    pub token: i32,
    pub series: QSeries,
}

/// Laurent expansion of `wp_k(z, tau)` in `z`, coefficients exact q-series.
#[derive(Clone, Debug, PartialEq)]
pub struct WpExpansion {
    pub k: i64,
    pub z_order: i64,
    pub terms: Vec<WpTerm>,
}

/// `wp_k(z) = z^{-k} + (-1)^k sum_{n>=1} binom(2n+1, k-1) G_{2n+2} z^{2n+2-k}`,
/// keeping powers `<= z_order`.
pub fn weierstrass_p(k: i64, z_order: i64, q_order: &Rational) -> Result<WpExpansion> {
    if k < 1 {
        return Err(Error::Parse(format!("wp index must be >= 1, got {k}")));
    }
    let mut terms = vec![WpTerm { power: -k, token: 0, series: QSeries::one(q_order.clone()) }];
    let sign = if k % 2 == 0 { int(1) } else { int(-1) };
    let mut n = 1;
    while 2 * n + 2 - k <= z_order {
        let c = binomial(&int(2 * n + 1), (k - 1) as u64) * &sign;
        if !c.is_zero() {
            let e = eisenstein_any((2 * n + 2) as u32, q_order).scale(&c);
            terms.push(WpTerm { power: 2 * n + 2 - k, token: (2 * n + 2) as i32, series: e });
        }
        n += 1;
    }
    Ok(WpExpansion { k, z_order, terms })
}

/// Upper bound for `|G_{2m}(tau)|` from the q-expansion.
pub fn g_bound(m2: u32, tau: Complex64) -> f64 {
    let aq = (-2.0 * PI * tau.im).exp();
    let k = m2 as f64;
    let lead = 2.0 * zeta_real(k);
    // log of (2 pi)^k / (k-1)!
    let lpref = k * (2.0 * PI).ln() - ln_factorial(m2 as u64 - 1);
    let zk = zeta_real(k - 1.0);
    let mut sum = 0.0;
    let mut n = 1.0f64;
    loop {
        let lt = (k - 1.0) * n.ln() + n * aq.ln();
        let t = (lpref + lt).exp() * zk;
        sum += t;
        // terms decrease geometrically once n exceeds the peak
        let ratio = ((n + 1.0) / n).powf(k - 1.0) * aq;
        if n > (k - 1.0) / (-aq.ln()) + 1.0 && ratio < 0.5 && t < 1e-300f64.max(sum * 1e-18) {
            sum += t * ratio / (1.0 - ratio);
            break;
        }
        n += 1.0;
        if n > 1e6 {
            return f64::INFINITY;
        }
    }
    lead + 2.0 * sum
}

fn ln_factorial(n: u64) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

impl WpExpansion {
    pub fn evaluate(&self, z: Complex64, tau: Complex64) -> Result<Evaluation> {
        check_tau(tau)?;
        let mut value = Complex64::new(0.0, 0.0);
        let mut tail = 0.0;
        let az = z.norm();
        for t in &self.terms {
            let budget = if t.token == 0 { GrowthBudget::new(1.0, 1.0) } else { eisenstein_budget(t.token as u32) };
            let ev = t.series.evaluate(tau, &budget)?;
            let w = two_pi_i_pow(t.token) * z.powi(t.power as i32);
            value += w * ev.value;
            tail += w.norm() * ev.tail_bound;
        }
        // z-tail beyond z_order
        let k = self.k;
        let mut n = 1;
        while 2 * n + 2 - k <= self.z_order {
            n += 1;
        }
        let mut ztail = 0.0;
        let mut prev = f64::INFINITY;
        for _ in 0..400 {
            let c = binomial(&int(2 * n + 1), (k - 1) as u64);
            let t = to_f64(&c).abs() * g_bound((2 * n + 2) as u32, tau) * az.powi((2 * n + 2 - k) as i32);
            ztail += t;
            if t < 1e-300 || (t < prev * 0.5 && t < ztail * 1e-18) {
                ztail += t;
                break;
            }
            prev = t;
            n += 1;
        }
        Ok(Evaluation { value, tail_bound: tail + ztail })
    }
}

fn eval_eisenstein(k: u32, order: &Rational, tau: Complex64) -> Result<Evaluation> {
    eisenstein_any(k, order).evaluate(tau, &eisenstein_budget(k))
}

/// `E_k(rho tau) = (c tau + d)^k E_k(tau)`.
pub fn verify_eisenstein_modularity(
    k: i64,
    rho: Sl2,
    tau: Complex64,
    tol: f64,
    order: &Rational,
) -> Result<TransformReport> {
    check_tau(tau)?;
    eisenstein_e(k, order)?;
    let l = eval_eisenstein(k as u32, order, rho.act(tau))?;
    let r = eval_eisenstein(k as u32, order, tau)?;
    let j = rho.j(tau).powi(k as i32);
    TransformReport::new(
        format!("E{k}"),
        rho,
        tau,
        l.value,
        j * r.value,
        l.tail_bound + j.norm() * r.tail_bound,
        tol,
    )
}

/// `wp_k(z / (c tau + d), rho tau) = (c tau + d)^k wp_k(z, tau)`.
pub fn verify_wp_modularity(
    k: i64,
    rho: Sl2,
    z: Complex64,
    tau: Complex64,
    tol: f64,
    order: &Rational,
    z_order: i64,
) -> Result<TransformReport> {
    check_tau(tau)?;
    let wp = weierstrass_p(k, z_order, order)?;
    let jt = rho.j(tau);
    let l = wp.evaluate(z / jt, rho.act(tau))?;
    let r = wp.evaluate(z, tau)?;
    let j = jt.powi(k as i32);
    TransformReport::new(
        format!("wp{k}"),
        rho,
        tau,
        l.value,
        j * r.value,
        l.tail_bound + j.norm() * r.tail_bound,
        tol,
    )
}

/// `eta(tau + 1) = e^{pi i / 12} eta(tau)` and `eta(-1/tau) = sqrt(-i tau) eta(tau)`.
pub fn verify_eta_modularity(rho: Sl2, tau: Complex64, tol: f64, order: &Rational) -> Result<TransformReport> {
    check_tau(tau)?;
    let eta = dedekind_eta(order)?;
    let b = eta_budget(1);
    let r = eta.evaluate(tau, &b)?;
    let (l, factor) = if rho == Sl2::T {
        (eta.evaluate(tau + 1.0, &b)?, Complex64::from_polar(1.0, PI / 12.0))
    } else if rho == Sl2::S {
        (eta.evaluate(-tau.inv(), &b)?, (Complex64::new(0.0, -1.0) * tau).sqrt())
    } else {
        return Err(Error::Parse("eta law is checked for S and T only".into()));
    };
    TransformReport::new("eta", rho, tau, l.value, factor * r.value, l.tail_bound + factor.norm() * r.tail_bound, tol)
}

/// Memoized partition-style helper used by tests and budgets.
pub fn cached_eta_power(k: i64, order: &Rational) -> Result<QSeries> {
    static CACHE: Lazy<Mutex<HashMap<(i64, String), QSeries>>> = Lazy::new(|| Mutex::new(HashMap::new()));
    let key = (k, order.to_string());
    if let Some(s) = CACHE.lock().get(&key) {
        return Ok(s.clone());
    }
    let s = eta_power(k, order)?;
    CACHE.lock().insert(key, s.clone());
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bernoulli_numbers() {
        assert_eq!(bernoulli(1), rat(-1, 2));
        assert_eq!(bernoulli(4), rat(-1, 30));
        assert_eq!(bernoulli(12), rat(-691, 2730));
        assert!(bernoulli(7).is_zero());
    }

    #[test]
    fn sl2_relations() {
        let st = Sl2::st();
        let st3 = st.compose(&st).compose(&st);
        assert_eq!(st3, Sl2::S.compose(&Sl2::S));
        assert_eq!(st3, Sl2 { a: -1, b: 0, c: 0, d: -1 });
        assert!(Sl2::new(1, 1, 1, 1).is_err());
    }

    #[test]
    fn rejects_odd_weight() {
        assert!(matches!(eisenstein_e(5, &int(5)), Err(Error::OddOrSmallWeight(5))));
        assert!(matches!(eisenstein_e(2, &int(5)), Err(Error::OddOrSmallWeight(2))));
    }

    #[test]
    fn rejects_lower_half_plane() {
        let r = verify_eisenstein_modularity(4, Sl2::S, Complex64::new(0.0, -1.0), 1e-8, &int(20));
        assert!(matches!(r, Err(Error::NotInUpperHalfPlane(_))));
    }
}
