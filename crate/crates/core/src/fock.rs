//! Heisenberg Fock modules: basis kets, mode actions, Schur polynomials,
//! the Li Delta-operator, vertex operator modes and square-bracket modes.

use std::collections::BTreeMap;
use std::fmt;

use num::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::lattice::{CartanVector, RationalLattice};
use crate::rational::{binomial, format_rational, frac, int, rat, Rational};

/// Basis vector `e_{i1}(-n1) ... e_{ir}(-nr) |alpha>`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Ket {
    /// Lattice charge `alpha` in basis coordinates.
    pub charge: CartanVector,
    /// Creation factors `(direction, n)` standing for `e_dir(-n)`, `n > 0`, sorted.
    pub modes: Vec<(usize, Rational)>,
}

impl Ket {
    pub fn vacuum(d: usize) -> Self {
        Ket { charge: vec![int(0); d], modes: Vec::new() }
    }

    pub fn level(&self) -> Rational {
        self.modes.iter().map(|(_, n)| n.clone()).sum()
    }

    fn with_added(&self, dir: usize, n: Rational) -> Ket {
        let mut k = self.clone();
        let pos = k.modes.binary_search(&(dir, n.clone())).unwrap_or_else(|p| p);
        k.modes.insert(pos, (dir, n));
        k
    }
}

/// Finite linear combination of kets with rational coefficients.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FockState {
    pub terms: BTreeMap<Ket, Rational>,
}

impl FockState {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_ket(k: Ket) -> Self {
        let mut s = Self::zero();
        s.terms.insert(k, Rational::one());
        s
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, k: Ket, c: Rational) {
        if c.is_zero() {
            return;
        }
        let e = self.terms.entry(k.clone()).or_insert_with(Rational::zero);
        *e += c;
        if e.is_zero() {
            self.terms.remove(&k);
        }
    }

    pub fn add_scaled(&mut self, other: &FockState, c: &Rational) {
        if c.is_zero() {
            return;
        }
        for (k, v) in &other.terms {
            self.add_term(k.clone(), v * c);
        }
    }

    pub fn plus(&self, other: &FockState) -> FockState {
        let mut s = self.clone();
        s.add_scaled(other, &int(1));
        s
    }

    pub fn minus(&self, other: &FockState) -> FockState {
        let mut s = self.clone();
        s.add_scaled(other, &int(-1));
        s
    }

    pub fn scale(&self, c: &Rational) -> FockState {
        let mut s = FockState::zero();
        s.add_scaled(self, c);
        s
    }

    pub fn coefficient(&self, k: &Ket) -> Rational {
        self.terms.get(k).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn max_level(&self) -> Rational {
        self.terms.keys().map(|k| k.level()).max().unwrap_or_else(Rational::zero)
    }

    /// Scalar `c` if the state is `c` times the vacuum of charge zero.
    pub fn as_vacuum_multiple(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => {
                let (k, c) = self.terms.iter().next().unwrap();
                (k.modes.is_empty() && k.charge.iter().all(|x| x.is_zero())).then(|| c.clone())
            }
            _ => None,
        }
    }
}

impl fmt::Display for FockState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({})", format_rational(c))?;
            for (i, n) in &k.modes {
                write!(f, " e{i}(-{})", format_rational(n))?;
            }
            let ch: Vec<String> = k.charge.iter().map(format_rational).collect();
            write!(f, "|{}>", ch.join(","))?;
        }
        Ok(())
    }
}

/// Module data: zero-mode shift `u0` and per-direction mode classes in `{0, 1/2}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Sector {
    pub charge_shift: CartanVector,
    pub twist: Vec<Rational>,
}

impl Sector {
    pub fn untwisted(d: usize) -> Self {
        Sector { charge_shift: vec![int(0); d], twist: vec![int(0); d] }
    }

    pub fn charged(u0: CartanVector) -> Self {
        let d = u0.len();
        Sector { charge_shift: u0, twist: vec![int(0); d] }
    }

    pub fn is_untwisted(&self) -> bool {
        self.twist.iter().all(|r| r.is_zero())
    }
}

/// A Heisenberg Fock module over a lattice, in a given sector.
#[derive(Clone, Debug, PartialEq)]
pub struct FockSpace {
    pub lattice: RationalLattice,
    pub sector: Sector,
}

impl FockSpace {
    pub fn new(lattice: RationalLattice) -> Self {
        let d = lattice.rank();
        FockSpace { lattice, sector: Sector::untwisted(d) }
    }

    pub fn with_sector(lattice: RationalLattice, sector: Sector) -> Result<Self> {
        lattice.check_dim(&sector.charge_shift, "charge shift")?;
        lattice.check_dim(&sector.twist, "twist")?;
        let half = rat(1, 2);
        for r in &sector.twist {
            if !(r.is_zero() || *r == half) {
                return Err(Error::IncompatibleSector(format!("mode class {r} not in {{0, 1/2}}")));
            }
        }
        let d = lattice.rank();
        for i in 0..d {
            for j in 0..d {
                if !lattice.gram()[i][j].is_zero() && !(&sector.twist[i] + &sector.twist[j]).is_integer() {
                    return Err(Error::IncompatibleSector(format!(
                        "directions {i} and {j} pair nontrivially but have different mode classes"
                    )));
                }
            }
        }
        Ok(FockSpace { lattice, sector })
    }

    /// Twisted sector from a vector `t`: direction `i` gets class `frac(<t, e_i>)`.
    pub fn twisted_by(lattice: RationalLattice, t: &[Rational]) -> Result<Self> {
        lattice.check_dim(t, "twist vector")?;
        let twist: Vec<Rational> = lattice.pairing_with_basis(t).iter().map(frac).collect();
        let d = lattice.rank();
        Self::with_sector(lattice, Sector { charge_shift: vec![int(0); d], twist })
    }

    pub fn rank(&self) -> usize {
        self.lattice.rank()
    }

    pub fn vacuum(&self) -> FockState {
        FockState::from_ket(Ket::vacuum(self.rank()))
    }

    pub fn charged_vacuum(&self, alpha: CartanVector) -> FockState {
        FockState::from_ket(Ket { charge: alpha, modes: Vec::new() })
    }

    pub fn ket(&self, alpha: CartanVector, modes: &[(usize, Rational)]) -> Result<FockState> {
        self.lattice.check_dim(&alpha, "charge")?;
        let mut k = Ket { charge: alpha, modes: Vec::new() };
        for (i, n) in modes {
            if *i >= self.rank() || !n.is_positive() {
                return Err(Error::DimensionMismatch(format!("bad creation factor e{i}(-{n})")));
            }
            if !(n - &self.sector.twist[*i]).is_integer() && !(n + &self.sector.twist[*i]).is_integer() {
                return Err(Error::IncompatibleSector(format!("e{i}(-{n})")));
            }
            k = k.with_added(*i, n.clone());
        }
        Ok(FockState::from_ket(k))
    }

    /// Common mode class of the directions in the support of `h`.
    pub fn mode_class(&self, h: &[Rational]) -> Result<Rational> {
        let mut class: Option<&Rational> = None;
        for (i, hi) in h.iter().enumerate() {
            if hi.is_zero() {
                continue;
            }
            match class {
                None => class = Some(&self.sector.twist[i]),
                Some(c) if *c != self.sector.twist[i] => {
                    return Err(Error::IncompatibleSector("vector mixes mode classes".into()))
                }
                _ => {}
            }
        }
        Ok(class.cloned().unwrap_or_else(Rational::zero))
    }

    /// Energy `sum n + |alpha + u0|^2 / 2`.
    pub fn energy(&self, k: &Ket) -> Rational {
        let beta: Vec<Rational> = k.charge.iter().zip(&self.sector.charge_shift).map(|(a, u)| a + u).collect();
        k.level() + self.lattice.norm(&beta) / int(2)
    }

    /// `h(n)` acting on a state.
    pub fn apply_mode(&self, h: &[Rational], n: &Rational, s: &FockState) -> Result<FockState> {
        self.lattice.check_dim(h, "mode vector")?;
        if h.iter().all(|x| x.is_zero()) {
            return Ok(FockState::zero());
        }
        let class = self.mode_class(h)?;
        if !(n - &class).is_integer() {
            return Err(Error::IncompatibleSector(format!("mode {n} not in class {class} + Z")));
        }
        let mut out = FockState::zero();
        if n.is_negative() {
            let m = -n.clone();
            for (k, c) in &s.terms {
                for (i, hi) in h.iter().enumerate() {
                    if !hi.is_zero() {
                        out.add_term(k.with_added(i, m.clone()), c * hi);
                    }
                }
            }
        } else if n.is_zero() {
            for (k, c) in &s.terms {
                let beta: Vec<Rational> =
                    k.charge.iter().zip(&self.sector.charge_shift).map(|(a, u)| a + u).collect();
                out.add_term(k.clone(), c * self.lattice.pair(h, &beta));
            }
        } else {
            let hg = self.lattice.pairing_with_basis(h);
            for (k, c) in &s.terms {
                let mut idx = 0;
                while idx < k.modes.len() {
                    let (j, m) = &k.modes[idx];
                    if m == n && !hg[*j].is_zero() {
                        let mut nk = k.clone();
                        nk.modes.remove(idx);
                        out.add_term(nk, c * n * &hg[*j]);
                    }
                    idx += 1;
                }
            }
        }
        Ok(out)
    }

    /// Apply `h1(n1) h2(n2) ... hr(nr)` (rightmost acts first).
    pub fn apply_word(&self, word: &[(CartanVector, Rational)], s: &FockState) -> Result<FockState> {
        let mut cur = s.clone();
        for (h, n) in word.iter().rev() {
            cur = self.apply_mode(h, n, &cur)?;
            if cur.is_zero() {
                break;
            }
        }
        Ok(cur)
    }

    /// `p_s(u(1), u(2), ...) a`.
    pub fn schur_apply(&self, s: usize, u: &[Rational], a: &FockState) -> Result<FockState> {
        if self.mode_class(u)? != Rational::zero() {
            return Err(Error::IncompatibleSector("Delta needs integral modes of u".into()));
        }
        let mut out = FockState::zero();
        for (exps, c) in schur_polynomial(s) {
            let mut cur = a.clone();
            for (idx, &k) in exps.iter().enumerate() {
                for _ in 0..k {
                    cur = self.apply_mode(u, &int(idx as i64 + 1), &cur)?;
                }
            }
            out.add_scaled(&cur, &c);
        }
        Ok(out)
    }

    /// `Delta(u, z) a = z^{u(0)} exp(sum_{n>=1} u(n) (-z)^{-n} / (-n)) a`, as a map
    /// from z-exponents to states.
    pub fn delta_apply(&self, u: &[Rational], a: &FockState) -> Result<BTreeMap<Rational, FockState>> {
        self.lattice.check_dim(u, "Delta vector")?;
        let mut out: BTreeMap<Rational, FockState> = BTreeMap::new();
        for (k, c) in &a.terms {
            let single = FockState::from_ket(k.clone());
            let beta: Vec<Rational> = k.charge.iter().zip(&self.sector.charge_shift).map(|(x, y)| x + y).collect();
            let lam = self.lattice.pair(u, &beta);
            let top = k.level().ceil().to_integer().to_usize().unwrap_or(0);
            for s in 0..=top {
                let part = self.schur_apply(s, u, &single)?;
                if part.is_zero() {
                    continue;
                }
                let e = &lam - int(s as i64);
                out.entry(e).or_default().add_scaled(&part, c);
            }
        }
        out.retain(|_, v| !v.is_zero());
        Ok(out)
    }

    /// `Delta(v, z) Delta(u, z) a`.
    pub fn delta_compose(&self, v: &[Rational], u: &[Rational], a: &FockState) -> Result<BTreeMap<Rational, FockState>> {
        let first = self.delta_apply(u, a)?;
        let mut out: BTreeMap<Rational, FockState> = BTreeMap::new();
        for (e1, st) in first {
            for (e2, st2) in self.delta_apply(v, &st)? {
                out.entry(&e1 + &e2).or_default().add_scaled(&st2, &int(1));
            }
        }
        out.retain(|_, v| !v.is_zero());
        Ok(out)
    }

    /// `h(-1) vac`.
    pub fn cartan_state(&self, h: &[Rational]) -> Result<FockState> {
        self.apply_mode(h, &int(-1), &self.vacuum())
    }

    /// Conformal vector `(1/2) sum (G^{-1})_{ij} e_i(-1) e_j(-1) vac`.
    pub fn omega(&self) -> FockState {
        let inv = self.lattice.inverse_gram();
        let d = self.rank();
        let mut out = FockState::zero();
        for i in 0..d {
            for j in 0..d {
                let k = Ket::vacuum(d).with_added(i, int(1)).with_added(j, int(1));
                out.add_term(k, &inv[i][j] / int(2));
            }
        }
        out
    }

    fn require_untwisted(&self) -> Result<()> {
        if self.sector.is_untwisted() {
            Ok(())
        } else {
            Err(Error::IncompatibleSector("vertex operators are built for untwisted sectors".into()))
        }
    }

    /// Mode `a_(k) w` of the vertex operator of a charge-zero state `a`.
    pub fn vertex_mode(&self, a: &FockState, k: i64, w: &FockState) -> Result<FockState> {
        self.require_untwisted()?;
        let mut out = FockState::zero();
        for (ket, c) in &a.terms {
            if ket.charge.iter().any(|x| !x.is_zero()) {
                return Err(Error::UnsupportedInsertion("charged states have no Fock vertex operator here".into()));
            }
            let factors: Vec<(usize, i64)> =
                ket.modes.iter().map(|(i, n)| (*i, n.to_integer().to_i64().unwrap())).collect();
            let part = self.monomial_mode(&factors, k, w)?;
            out.add_scaled(&part, c);
        }
        Ok(out)
    }

    /// `Y(e_i(-n) rest, z) = :d^{(n-1)} e_i(z) Y(rest, z):`, mode `k`.
    fn monomial_mode(&self, factors: &[(usize, i64)], k: i64, w: &FockState) -> Result<FockState> {
        if factors.is_empty() {
            return Ok(if k == -1 { w.clone() } else { FockState::zero() });
        }
        let (i, n) = factors[0];
        let rest = &factors[1..];
        let wt_rest: i64 = rest.iter().map(|(_, m)| m).sum();
        let lvl = w.max_level().ceil().to_integer().to_i64().unwrap();
        let mut e = vec![int(0); self.rank()];
        e[i] = int(1);
        let mut out = FockState::zero();
        let lo = k - n - lvl - wt_rest;
        for j in lo..=lvl {
            let c = binomial(&int(-j - 1), (n - 1) as u64);
            if c.is_zero() {
                continue;
            }
            let l = k - j - n;
            let term = if j < 0 {
                let inner = self.monomial_mode(rest, l, w)?;
                self.apply_mode(&e, &int(j), &inner)?
            } else {
                let inner = self.apply_mode(&e, &int(j), w)?;
                if inner.is_zero() {
                    continue;
                }
                self.monomial_mode(rest, l, &inner)?
            };
            out.add_scaled(&term, &c);
        }
        Ok(out)
    }

    /// `L(n) = omega_(n+1)`.
    pub fn virasoro(&self, n: i64, s: &FockState) -> Result<FockState> {
        self.vertex_mode(&self.omega(), n + 1, s)
    }

    /// Square-bracket mode
    /// `a_[m] b = Res_w Y(a, w) (log(1+w))^m (1+w)^{wt a - 1}` for homogeneous `a`.
    pub fn bracket_mode(&self, a: &FockState, m: i64, b: &FockState) -> Result<FockState> {
        let wt = homogeneous_weight(a)?;
        let lvl_b = b.max_level().ceil().to_integer().to_i64().unwrap();
        let top = lvl_b + wt - 1;
        if top < m {
            return Ok(FockState::zero());
        }
        let len = (top - m + 1) as usize;
        let coeffs = bracket_kernel(m, wt, len);
        let mut out = FockState::zero();
        for (idx, c) in coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let k = m + idx as i64;
            let part = self.vertex_mode(a, k, b)?;
            out.add_scaled(&part, c);
        }
        Ok(out)
    }

    /// Twisted-module mode `(a_(m) b)_(p)` for Cartan vectors `a`, `b`, computed
    /// from the twisted normal-ordered product plus its contraction term.
    pub fn iterate_lhs(&self, a: &[Rational], b: &[Rational], m: i64, p: &Rational, s: &FockState) -> Result<FockState> {
        let r = self.mode_class(a)?;
        let sb = self.mode_class(b)?;
        let ab = self.lattice.pair(a, b);
        if m >= 0 {
            if m == 1 && *p == int(-1) {
                return Ok(s.scale(&ab));
            }
            return Ok(FockState::zero());
        }
        let k = -m;
        let lvl = s.max_level().ceil().to_integer().to_i64().unwrap();
        let mut out = FockState::zero();
        let start = (p - int(k) - int(lvl) - int(3)).floor() + &r;
        let mut n = start;
        let end = int(lvl + 2);
        while n <= end {
            let mb = p - &n - int(k);
            if (&mb - &sb).is_integer() {
                let c = binomial(&(-n.clone() - int(1)), (k - 1) as u64);
                if !c.is_zero() {
                    let t = if n.is_positive() {
                        let inner = self.apply_mode(a, &n, s)?;
                        self.apply_mode(b, &mb, &inner)?
                    } else {
                        let inner = self.apply_mode(b, &mb, s)?;
                        self.apply_mode(a, &n, &inner)?
                    };
                    out.add_scaled(&t, &c);
                }
            }
            n += int(1);
        }
        if *p == int(k) && !ab.is_zero() {
            let neg_r = -r.clone();
            let eps = binomial(&neg_r, (k + 1) as u64) + &r * binomial(&neg_r, k as u64);
            out.add_scaled(s, &(ab * eps));
        }
        Ok(out)
    }

    /// Right side of the twisted iterate formula truncated at `i <= terms`:
    /// `sum_i sum_j (-1)^j binom(-r, i) binom(m+i, j)
    ///  { a(m+i-j+r) b(n-i+j+s) - (-1)^{m+i} b(m+n-j+s) a(j+r) }`.
    pub fn iterate_rhs(&self, a: &[Rational], b: &[Rational], m: i64, n: i64, s: &FockState, terms: usize) -> Result<FockState> {
        let r = self.mode_class(a)?;
        let sb = self.mode_class(b)?;
        let lvl = s.max_level().ceil().to_integer().to_i64().unwrap();
        let mut out = FockState::zero();
        for i in 0..=terms as i64 {
            let ci = binomial(&(-r.clone()), i as u64);
            if ci.is_zero() {
                continue;
            }
            let jmax = 2 * lvl + n.abs() + m.abs() + terms as i64 + 8;
            for j in 0..=jmax {
                let cj = binomial(&int(m + i), j as u64) * &ci * if j % 2 == 0 { int(1) } else { int(-1) };
                if cj.is_zero() {
                    continue;
                }
                let t1 = {
                    let inner = self.apply_mode(b, &(int(n - i + j) + &sb), s)?;
                    self.apply_mode(a, &(int(m + i - j) + &r), &inner)?
                };
                let t2 = {
                    let inner = self.apply_mode(a, &(int(j) + &r), s)?;
                    self.apply_mode(b, &(int(m + n - j) + &sb), &inner)?
                };
                let sg = if (m + i) % 2 == 0 { int(1) } else { int(-1) };
                out.add_scaled(&t1, &cj);
                out.add_scaled(&t2, &(-cj * sg));
            }
        }
        Ok(out)
    }

    /// Compare both sides of the iterate formula on `s`.
    pub fn iterate_check(&self, a: &[Rational], b: &[Rational], m: i64, n: i64, s: &FockState, terms: usize) -> Result<IterateReport> {
        let r = self.mode_class(a)?;
        let sb = self.mode_class(b)?;
        let p = int(n) + &r + &sb;
        let lhs = self.iterate_lhs(a, b, m, &p, s)?;
        let rhs = self.iterate_rhs(a, b, m, n, s, terms)?;
        let equal = lhs == rhs;
        Ok(IterateReport { m, n, class_a: r, class_b: sb, lhs, rhs, equal })
    }
}

#[derive(Clone, Debug)]
pub struct IterateReport {
    pub m: i64,
    pub n: i64,
    pub class_a: Rational,
    pub class_b: Rational,
    pub lhs: FockState,
    pub rhs: FockState,
    pub equal: bool,
}

/// L(0)-weight of a charge-zero state whose kets all share one level.
pub fn homogeneous_weight(a: &FockState) -> Result<i64> {
    let mut wt: Option<Rational> = None;
    for k in a.terms.keys() {
        if k.charge.iter().any(|x| !x.is_zero()) {
            return Err(Error::UnsupportedInsertion("charged state".into()));
        }
        let l = k.level();
        match &wt {
            None => wt = Some(l),
            Some(w) if *w != l => return Err(Error::UnsupportedInsertion("state is not L(0)-homogeneous".into())),
            _ => {}
        }
    }
    Ok(wt.map(|w| w.to_integer().to_i64().unwrap()).unwrap_or(0))
}

/// Coefficients of `w^{m}, w^{m+1}, ...` in `(log(1+w))^m (1+w)^{wt-1}`.
fn bracket_kernel(m: i64, wt: i64, len: usize) -> Vec<Rational> {
    // g = log(1+w)/w = sum (-1)^j w^j / (j+1)
    let g: Vec<Rational> = (0..len).map(|j| rat(if j % 2 == 0 { 1 } else { -1 }, j as i64 + 1)).collect();
    let gm = series_pow(&g, m, len);
    let binom: Vec<Rational> = (0..len).map(|j| binomial(&int(wt - 1), j as u64)).collect();
    series_mul(&gm, &binom, len)
}

fn series_mul(a: &[Rational], b: &[Rational], len: usize) -> Vec<Rational> {
    let mut out = vec![Rational::zero(); len];
    for (i, x) in a.iter().enumerate().take(len) {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate().take(len - i) {
            out[i + j] += x * y;
        }
    }
    out
}

fn series_pow(a: &[Rational], m: i64, len: usize) -> Vec<Rational> {
    let base = if m < 0 { series_inv(a, len) } else { a.to_vec() };
    let mut acc = vec![Rational::zero(); len];
    acc[0] = Rational::one();
    for _ in 0..m.unsigned_abs() {
        acc = series_mul(&acc, &base, len);
    }
    acc
}

fn series_inv(a: &[Rational], len: usize) -> Vec<Rational> {
    let mut inv = vec![Rational::zero(); len];
    inv[0] = a[0].recip();
    for n in 1..len {
        let mut s = Rational::zero();
        for k in 1..=n.min(a.len() - 1) {
            s += &a[k] * &inv[n - k];
        }
        inv[n] = -s * &inv[0];
    }
    inv
}

/// Schur polynomial `p_s(x_1, ..., x_s)` from
/// `exp(sum_{n>=1} (-1)^{n+1} x_n y^n / n) = sum_s p_s y^s`, as
/// (exponent vector, coefficient) pairs.
pub fn schur_polynomial(s: usize) -> Vec<(Vec<u32>, Rational)> {
    let mut polys: Vec<BTreeMap<Vec<u32>, Rational>> = Vec::with_capacity(s + 1);
    let mut p0 = BTreeMap::new();
    p0.insert(vec![0u32; s], Rational::one());
    polys.push(p0);
    for t in 1..=s {
        let mut pt: BTreeMap<Vec<u32>, Rational> = BTreeMap::new();
        for n in 1..=t {
            let sign = if n % 2 == 1 { int(1) } else { int(-1) };
            for (ex, c) in &polys[t - n] {
                let mut e = ex.clone();
                e[n - 1] += 1;
                let v = pt.entry(e).or_insert_with(Rational::zero);
                *v += c * &sign / int(t as i64);
            }
        }
        pt.retain(|_, c| !c.is_zero());
        polys.push(pt);
    }
    polys.pop().unwrap().into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a1() -> FockSpace {
        FockSpace::new(RationalLattice::from_ints(&[&[2]]).unwrap())
    }

    #[test]
    fn schur_low_degrees() {
        let p1 = schur_polynomial(1);
        assert_eq!(p1, vec![(vec![1], int(1))]);
        let p2: BTreeMap<_, _> = schur_polynomial(2).into_iter().collect();
        assert_eq!(p2[&vec![2, 0]], rat(1, 2));
        assert_eq!(p2[&vec![0, 1]], rat(-1, 2));
    }

    #[test]
    fn delta_on_omega() {
        let f = a1();
        let u = vec![rat(1, 2)];
        let d = f.delta_apply(&u, &f.omega()).unwrap();
        assert_eq!(d[&int(0)], f.omega());
        assert_eq!(d[&int(-1)], f.cartan_state(&u).unwrap());
        assert_eq!(d[&int(-2)], f.vacuum().scale(&(f.lattice.norm(&u) / int(2))));
    }

    #[test]
    fn bracket_of_omega_on_cartan() {
        let f = a1();
        let h = f.cartan_state(&[int(1)]).unwrap();
        assert_eq!(f.bracket_mode(&f.omega(), 1, &h).unwrap(), h);
        let w = f.omega();
        let c = int(1);
        let expect = w.scale(&int(2)).minus(&f.vacuum().scale(&(c / int(12))));
        assert_eq!(f.bracket_mode(&w, 1, &w).unwrap(), expect);
        assert!(f.bracket_mode(&w, 1, &f.vacuum()).unwrap().is_zero());
    }

    #[test]
    fn virasoro_weights() {
        let f = a1();
        let k = f.ket(vec![int(0)], &[(0, int(2)), (0, int(1))]).unwrap();
        assert_eq!(f.virasoro(0, &k).unwrap(), k.scale(&int(3)));
    }

    #[test]
    fn mixed_classes_rejected() {
        let l = RationalLattice::from_ints(&[&[2, 0], &[0, 2]]).unwrap();
        let f = FockSpace::twisted_by(l, &[rat(1, 4), int(0)]).unwrap();
        let h = vec![int(1), int(1)];
        assert!(matches!(f.apply_mode(&h, &rat(1, 2), &f.vacuum()), Err(Error::IncompatibleSector(_))));
        assert!(matches!(f.apply_mode(&[int(1), int(0)], &int(1), &f.vacuum()), Err(Error::IncompatibleSector(_))));
    }

    #[test]
    fn iterate_half_integer_sector() {
        let f = FockSpace::twisted_by(RationalLattice::from_ints(&[&[2]]).unwrap(), &[rat(1, 4)]).unwrap();
        let h = vec![int(1)];
        let s = f.ket(vec![int(0)], &[(0, rat(1, 2))]).unwrap();
        for m in [-3, -2, -1, 0, 1] {
            for n in [-2, -1, 0, 1] {
                let rep = f.iterate_check(&h, &h, m, n, &s, 5).unwrap();
                assert!(rep.equal, "m={m} n={n}");
            }
        }
    }
}
