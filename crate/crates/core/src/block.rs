//! Torus one-point functions of lattice VOA modules with characteristics:
//! closed forms, literal Fock-space traces, fitted transformation matrices
//! and the Zhu recurrence.

use std::f64::consts::PI;
use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};

use num::{ToPrimitive, Zero};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::cyclo::Cyclo;
use crate::error::{Error, Result};
use crate::fit::{fit_matrix, FitResult};
use crate::fock::{FockSpace, FockState, Ket, Sector};
use crate::lattice::{
    discriminant_data, find_class, parse_vector, weighted_theta, CartanVector, LatticeCoset, RationalLattice,
    ThetaWeight,
};
use crate::modforms::{bernoulli, check_tau, eisenstein_any, eta_power, weierstrass_p, Sl2, TransformReport};
use crate::qseries::{Evaluation, GrowthBudget, QSeries};
use crate::rational::{factorial, format_rational, int, parse_rational, rat, to_f64, Rational};

static BASIS_LIMIT: AtomicUsize = AtomicUsize::new(1_000_000);

pub fn basis_limit() -> usize {
    BASIS_LIMIT.load(Ordering::Relaxed)
}

pub fn set_basis_limit(n: usize) {
    BASIS_LIMIT.store(n, Ordering::Relaxed);
}

/// Module `V_{L + lambda}` in the sector twisted by `(sigma(u0), sigma(v0))`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModuleSpec {
    pub lattice: RationalLattice,
    pub shift: CartanVector,
    pub sector_u0: CartanVector,
    pub stab_v0: CartanVector,
}

impl ModuleSpec {
    pub fn new(lattice: RationalLattice, shift: CartanVector) -> Result<Self> {
        let d = lattice.rank();
        Self::twisted(lattice, shift, vec![int(0); d], vec![int(0); d])
    }

    pub fn twisted(lattice: RationalLattice, shift: CartanVector, u0: CartanVector, v0: CartanVector) -> Result<Self> {
        lattice.check_dim(&shift, "shift")?;
        lattice.check_dim(&u0, "sector_u0")?;
        lattice.check_dim(&v0, "stab_v0")?;
        let shift = shift.iter().map(crate::rational::frac).collect();
        Ok(ModuleSpec { lattice, shift, sector_u0: u0, stab_v0: v0 })
    }

    pub fn rank(&self) -> usize {
        self.lattice.rank()
    }

    fn coset(&self) -> LatticeCoset {
        LatticeCoset::new(self.lattice.clone(), self.shift.clone()).expect("dimensions checked")
    }
}

/// Catalog of insertion states.
#[derive(Clone, Debug, PartialEq)]
pub enum Insertion {
    Vacuum,
    /// `h(-1) vac`
    Cartan(CartanVector),
    /// conformal vector
    Omega,
    /// `h_[-1] k = h(-1) k(-1) vac - <h,k>/12 vac`
    BracketProduct(CartanVector, CartanVector),
}

impl Insertion {
    /// Square-bracket weight; `None` for the inhomogeneous `omega`.
    pub fn bracket_weight(&self) -> Option<i64> {
        match self {
            Insertion::Vacuum => Some(0),
            Insertion::Cartan(_) => Some(1),
            Insertion::BracketProduct(..) => Some(2),
            Insertion::Omega => None,
        }
    }

    pub fn state(&self, space: &FockSpace) -> Result<FockState> {
        Ok(match self {
            Insertion::Vacuum => space.vacuum(),
            Insertion::Cartan(h) => space.cartan_state(h)?,
            Insertion::Omega => space.omega(),
            Insertion::BracketProduct(h, k) => {
                let hk = space.apply_mode(h, &int(-1), &space.cartan_state(k)?)?;
                hk.minus(&space.vacuum().scale(&(space.lattice.pair(h, k) / int(12))))
            }
        })
    }

    /// Parses `vacuum`, `omega`, `h:<c1,c2,..>` or `hk:<c..>;<c..>`.
    pub fn parse(s: &str) -> Result<Self> {
        let vec = |t: &str| -> Result<CartanVector> { t.split(',').map(parse_rational).collect() };
        match s.trim() {
            "vacuum" | "1" => Ok(Insertion::Vacuum),
            "omega" => Ok(Insertion::Omega),
            t if t.starts_with("h:") => Ok(Insertion::Cartan(vec(&t[2..])?)),
            t if t.starts_with("hk:") => {
                let (a, b) = t[3..].split_once(';').ok_or_else(|| Error::Parse(format!("bad insertion {t:?}")))?;
                Ok(Insertion::BracketProduct(vec(a)?, vec(b)?))
            }
            t => Err(Error::Parse(format!("unknown insertion {t:?}"))),
        }
    }

    fn check(&self, lat: &RationalLattice) -> Result<()> {
        match self {
            Insertion::Cartan(h) => lat.check_dim(h, "insertion"),
            Insertion::BracketProduct(h, k) => {
                lat.check_dim(h, "insertion")?;
                lat.check_dim(k, "insertion")
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Insertion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = |x: &CartanVector| x.iter().map(format_rational).collect::<Vec<_>>().join(",");
        match self {
            Insertion::Vacuum => write!(f, "vacuum"),
            Insertion::Omega => write!(f, "omega"),
            Insertion::Cartan(h) => write!(f, "h:{}", v(h)),
            Insertion::BracketProduct(h, k) => write!(f, "hk:{};{}", v(h), v(k)),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ThetaTask {
    pub module: ModuleSpec,
    pub insertion: Insertion,
    pub u: CartanVector,
    pub v: CartanVector,
    pub order: Rational,
}

impl ThetaTask {
    pub fn new(module: ModuleSpec, insertion: Insertion, u: CartanVector, v: CartanVector, order: Rational) -> Result<Self> {
        module.lattice.check_dim(&u, "u")?;
        module.lattice.check_dim(&v, "v")?;
        insertion.check(&module.lattice)?;
        Ok(ThetaTask { module, insertion, u, v, order })
    }

    pub fn from_json(j: &serde_json::Value) -> Result<Self> {
        let lattice = RationalLattice::from_json(&j["lattice"])?;
        let d = lattice.rank();
        let zero = || vec![int(0); d];
        let opt = |key: &str| -> Result<CartanVector> {
            match j.get(key) {
                None | Some(serde_json::Value::Null) => Ok(zero()),
                Some(v) => parse_vector(v),
            }
        };
        let shift = match j.get("shift") {
            Some(s) if !s.is_null() => parse_vector(s)?,
            _ => match j["lattice"].get("shift") {
                Some(s) if !s.is_null() => parse_vector(s)?,
                _ => zero(),
            },
        };
        let module = ModuleSpec::twisted(lattice, shift, opt("sector_u0")?, opt("stab_v0")?)?;
        let insertion = Insertion::parse(j.get("insertion").and_then(|x| x.as_str()).unwrap_or("vacuum"))?;
        let order = match j.get("order") {
            Some(serde_json::Value::String(s)) => parse_rational(s)?,
            Some(serde_json::Value::Number(n)) => int(n.as_i64().ok_or_else(|| Error::Parse("order".into()))?),
            _ => int(100),
        };
        ThetaTask::new(module, insertion, opt("u")?, opt("v")?, order)
    }
}

fn add_vec(a: &[Rational], b: &[Rational]) -> CartanVector {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn scale_vec(a: &[Rational], c: i64) -> CartanVector {
    a.iter().map(|x| x * int(c)).collect()
}

/// Multiply a theta series by `eta^{-d}`, landing at truncation `order`.
fn divide_by_eta(theta: &QSeries, d: i64, order: &Rational) -> Result<QSeries> {
    if theta.is_zero() {
        return Ok(QSeries::zero(order.clone()));
    }
    let eta = eta_power(-d, &(order - theta.offset()))?;
    Ok(theta.mul(&eta).truncate(order))
}

/// Closed form
/// `Z = e^{pi i <u,v>} eta^{-d} sum_alpha P_a(alpha+u0+u) zeta(<v0,alpha> + <v,alpha+u0>) q^{|alpha+u0+u|^2/2}`.
pub fn z_theta(task: &ThetaTask) -> Result<QSeries> {
    let m = &task.module;
    let lat = &m.lattice;
    let d = lat.rank() as i64;
    let big_u = add_vec(&m.sector_u0, &task.u);
    let coset = m.coset();
    let order = &task.order;
    let th_order = order + rat(d, 24);
    let fix = Cyclo::zeta_of(&(lat.pair(&m.sector_u0, &task.v) / int(2)));
    let theta = |w: &ThetaWeight| -> Result<QSeries> {
        let t = weighted_theta(&coset, &big_u, &task.v, &m.stab_v0, w, &th_order)?;
        divide_by_eta(&t.scale_by(&fix), d, order)
    };
    match &task.insertion {
        Insertion::Vacuum => theta(&ThetaWeight::One),
        Insertion::Cartan(h) => theta(&ThetaWeight::Linear(h.clone())),
        Insertion::Omega => {
            let z = theta(&ThetaWeight::One)?;
            Ok(z.q_derivative().add(&z.scale(&rat(d, 24))))
        }
        Insertion::BracketProduct(h, k) => {
            let quad = theta(&ThetaWeight::Quadratic(h.clone(), k.clone()))?;
            let hk = lat.pair(h, k);
            if hk.is_zero() {
                return Ok(quad);
            }
            let vac = theta(&ThetaWeight::One)?;
            let e2 = eisenstein_any(2, &(order + int(1)));
            Ok(quad.add(&e2.mul(&vac).scale(&hk)).truncate(order))
        }
    }
}

/// Plain trace function (`u = v = 0`).
pub fn trace_function(module: &ModuleSpec, insertion: &Insertion, order: &Rational) -> Result<QSeries> {
    let d = module.rank();
    z_theta(&ThetaTask::new(module.clone(), insertion.clone(), vec![int(0); d], vec![int(0); d], order.clone())?)
}

/// All oscillator multisets `(direction, n)` of total level `level`.
fn oscillator_monomials(d: usize, level: i64) -> Vec<Vec<(usize, Rational)>> {
    fn rec(d: usize, rem: i64, min_n: i64, min_dir: usize, cur: &mut Vec<(usize, i64)>, out: &mut Vec<Vec<(usize, Rational)>>) {
        if rem == 0 {
            let mut v: Vec<(usize, Rational)> = cur.iter().map(|&(i, n)| (i, int(n))).collect();
            v.sort();
            out.push(v);
            return;
        }
        for n in min_n..=rem {
            let start = if n == min_n { min_dir } else { 0 };
            for dir in start..d {
                cur.push((dir, n));
                rec(d, rem - n, n, dir, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    rec(d, level, 1, 0, &mut Vec::new(), &mut out);
    out
}

/// Kets of a module with `level + |alpha + shift_extra|^2/2 < cap`, paired with
/// that energy.
fn module_kets(module: &ModuleSpec, extra: &[Rational], cap: &Rational) -> Result<Vec<(Ket, Rational)>> {
    let lat = &module.lattice;
    let d = lat.rank();
    let pts = lat.enumerate_by_norm(&module.coset(), extra, cap);
    let mut out = Vec::new();
    for p in pts {
        let room = cap - &p.shifted_norm;
        let mut level = 0i64;
        while int(level) < room {
            for modes in oscillator_monomials(d, level) {
                out.push((Ket { charge: p.coords.clone(), modes }, &p.shifted_norm + int(level)));
                if out.len() > basis_limit() {
                    return Err(Error::BasisTooLarge { size: out.len(), limit: basis_limit() });
                }
            }
            level += 1;
        }
    }
    Ok(out)
}

/// Zero-mode pieces `(state, mode)` of `Delta(u, 1) a` split by weight.
fn zero_mode_pieces(voa: &FockSpace, a: &FockState, u: &[Rational]) -> Result<Vec<(FockState, i64)>> {
    let comps = voa.delta_apply(u, a)?;
    let mut by_level: std::collections::BTreeMap<i64, FockState> = std::collections::BTreeMap::new();
    for st in comps.values() {
        for (k, c) in &st.terms {
            let l = k.level().to_integer().to_i64().unwrap();
            by_level.entry(l).or_default().add_term(k.clone(), c.clone());
        }
    }
    Ok(by_level.into_iter().filter(|(_, s)| !s.is_zero()).map(|(l, s)| (s, l - 1)).collect())
}

/// Literal trace
/// `Tr o(Delta(u,1) a) e^{2 pi i v(0)} phi^{-1} q^{L(0) + u(0) + <u,u>/2 - d/24}` over all kets
/// with energy below `cap`; the result is exact below `q^{cap - d/24}`.
pub fn z_theta_bruteforce(task: &ThetaTask, cap: &Rational) -> Result<QSeries> {
    let m = &task.module;
    let lat = &m.lattice;
    let d = lat.rank() as i64;
    let voa = FockSpace::new(lat.clone());
    let a = task.insertion.state(&voa)?;
    let pieces = zero_mode_pieces(&voa, &a, &task.u)?;
    let space = FockSpace::with_sector(lat.clone(), Sector::charged(m.sector_u0.clone()))?;
    let big_u = add_vec(&m.sector_u0, &task.u);
    let kets = module_kets(m, &big_u, cap)?;
    let half_uv = lat.pair(&task.u, &task.v) / int(2);
    let shift = rat(d, 24);
    let terms: Vec<(Rational, Cyclo)> = kets
        .par_iter()
        .map(|(ket, energy)| -> Result<Option<(Rational, Cyclo)>> {
            let st = FockState::from_ket(ket.clone());
            let mut val = Rational::zero();
            for (piece, mode) in &pieces {
                val += space.vertex_mode(piece, *mode, &st)?.coefficient(ket);
            }
            if val.is_zero() {
                return Ok(None);
            }
            let charge_u0 = add_vec(&ket.charge, &m.sector_u0);
            let phase = &half_uv + lat.pair(&task.v, &charge_u0) + lat.pair(&m.stab_v0, &ket.charge);
            Ok(Some((energy - &shift, Cyclo::zeta_of(&phase).scale(&val))))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    QSeries::from_terms(terms, cap - &shift)
}

/// Coefficient budget for `Z` with a given insertion.
pub fn z_budget(lat: &RationalLattice, big_u: &[Rational], ins: &Insertion) -> GrowthBudget {
    let d = lat.rank() as f64;
    let inv = lat.inverse_gram();
    let widths: Vec<f64> = (0..lat.rank()).map(|i| to_f64(&inv[i][i]).sqrt()).collect();
    let _ = big_u;
    let nrm = |h: &CartanVector| to_f64(&lat.norm(h)).sqrt();
    let (w1, w2, hk, kind) = match ins {
        Insertion::Vacuum => (0.0, 0.0, 0.0, 0),
        Insertion::Cartan(h) => (nrm(h), 0.0, 0.0, 1),
        Insertion::Omega => (0.0, 0.0, 0.0, 2),
        Insertion::BracketProduct(h, k) => (nrm(h), nrm(k), to_f64(&lat.pair(h, k)).abs(), 3),
    };
    GrowthBudget::dominating(
        move |e| {
            let e = e.max(0.0) + 1.0;
            let r = (2.0 * e).sqrt();
            let count: f64 = widths.iter().map(|w| 2.0 * r * w + 1.0).product();
            let p = match kind {
                0 => 1.0,
                1 => w1 * r,
                2 => e + 1.0,
                _ => w1 * w2 * r * r + hk * 3.0 * (e + 1.0).powi(3),
            };
            count * p.max(1.0) * (PI * (2.0 * d * e / 3.0).sqrt()).exp()
        },
        std::f64::consts::E,
    )
}

/// Evaluate `Z` at `tau` with its tail bound.
pub fn evaluate_z(series: &QSeries, lat: &RationalLattice, big_u: &[Rational], ins: &Insertion, tau: Complex64) -> Result<Evaluation> {
    series.evaluate(tau, &z_budget(lat, big_u, ins))
}

/// `(u, v) -> (a u + c v, b u + d v)`.
pub fn transform_characteristics(rho: &Sl2, u: &[Rational], v: &[Rational]) -> (CartanVector, CartanVector) {
    let nu = add_vec(&scale_vec(u, rho.a), &scale_vec(v, rho.c));
    let nv = add_vec(&scale_vec(u, rho.b), &scale_vec(v, rho.d));
    (nu, nv)
}

/// The modules `V_{L + mu}` of an even lattice, in one twisted sector.
#[derive(Clone, Debug, PartialEq)]
pub struct Family {
    pub lattice: RationalLattice,
    pub lambdas: Vec<CartanVector>,
    pub u0: CartanVector,
    pub v0: CartanVector,
}

impl Family {
    pub fn new(lattice: RationalLattice, u0: CartanVector, v0: CartanVector) -> Result<Self> {
        let lambdas = discriminant_data(&lattice)?.representatives;
        lattice.check_dim(&u0, "sector_u0")?;
        lattice.check_dim(&v0, "stab_v0")?;
        Ok(Family { lattice, lambdas, u0, v0 })
    }

    pub fn untwisted(lattice: RationalLattice) -> Result<Self> {
        let d = lattice.rank();
        Self::new(lattice, vec![int(0); d], vec![int(0); d])
    }

    pub fn transformed(&self, rho: &Sl2) -> Family {
        let (u0, v0) = transform_characteristics(rho, &self.u0, &self.v0);
        Family { u0, v0, ..self.clone() }
    }

    pub fn module(&self, i: usize) -> ModuleSpec {
        ModuleSpec::twisted(self.lattice.clone(), self.lambdas[i].clone(), self.u0.clone(), self.v0.clone()).unwrap()
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }
}

/// `Z` for a homogeneous insertion with its square-bracket weight; `omega`
/// is replaced by `omega - c/24`.
pub fn homogeneous_z(module: &ModuleSpec, ins: &Insertion, u: &[Rational], v: &[Rational], order: &Rational) -> Result<(QSeries, i64)> {
    let task = ThetaTask::new(module.clone(), ins.clone(), u.to_vec(), v.to_vec(), order.clone())?;
    let z = z_theta(&task)?;
    match ins.bracket_weight() {
        Some(w) => Ok((z, w)),
        None => {
            let vac = z_theta(&ThetaTask { insertion: Insertion::Vacuum, ..task })?;
            Ok((z.sub(&vac.scale(&rat(module.rank() as i64, 24))), 2))
        }
    }
}

/// Insertions used to pin down transformation matrices: vacuum, Cartan basis
/// vectors and bracket products of basis vectors.
pub fn fit_insertions(lat: &RationalLattice) -> Vec<Insertion> {
    let d = lat.rank();
    let e = |i: usize| -> CartanVector { (0..d).map(|j| if i == j { int(1) } else { int(0) }).collect() };
    let mut out = vec![Insertion::Vacuum];
    for i in 0..d {
        out.push(Insertion::Cartan(e(i)));
    }
    for i in 0..d {
        for j in i..d {
            out.push(Insertion::BracketProduct(e(i), e(j)));
        }
    }
    out
}

/// Sample points for fits, chosen to stay well inside the upper half plane
/// after S, T and ST.
pub const SAMPLE_TAUS: [(f64, f64); 8] = [
    (0.0, 1.0),
    (0.13, 1.1),
    (-0.21, 0.95),
    (0.3, 1.25),
    (-0.07, 1.4),
    (0.24, 0.85),
    (-0.33, 1.15),
    (0.41, 1.05),
];

const FIT_TAIL: f64 = 1e-12;

/// Evaluate each family member's `Z(a; (u, v))` at `tau`.
fn family_values(fam: &Family, series: &[QSeries], big_us: &[CartanVector], ins: &Insertion, tau: Complex64) -> Result<Vec<Complex64>> {
    series
        .iter()
        .zip(big_us)
        .map(|(s, bu)| {
            let ev = evaluate_z(s, &fam.lattice, bu, ins, tau)?;
            if ev.tail_bound > FIT_TAIL {
                return Err(Error::TailBoundExceeded { bound: ev.tail_bound, tolerance: FIT_TAIL });
            }
            Ok(ev.value)
        })
        .collect()
}

struct FamilyZ {
    series: Vec<QSeries>,
    big_us: Vec<CartanVector>,
    weight: i64,
}

fn family_z(fam: &Family, ins: &Insertion, u: &[Rational], v: &[Rational], order: &Rational) -> Result<FamilyZ> {
    let mut series = Vec::new();
    let mut weight = 0;
    for i in 0..fam.len() {
        let (z, w) = homogeneous_z(&fam.module(i), ins, u, v, order)?;
        series.push(z);
        weight = w;
    }
    let big_u = add_vec(&fam.u0, u);
    Ok(FamilyZ { series, big_us: vec![big_u; fam.len()], weight })
}

fn fit_rows(
    rho: &Sl2,
    fam: &Family,
    insertions: &[Insertion],
    u: &[Rational],
    v: &[Rational],
    order: &Rational,
) -> Result<Vec<(Vec<Complex64>, Vec<Complex64>)>> {
    let tgt = fam.transformed(rho);
    let (nu, nv) = transform_characteristics(rho, u, v);
    let per_ins: Vec<Vec<(Vec<Complex64>, Vec<Complex64>)>> = insertions
        .par_iter()
        .map(|ins| -> Result<Vec<_>> {
            let src = family_z(fam, ins, u, v, order)?;
            let dst = family_z(&tgt, ins, &nu, &nv, order)?;
            let mut rows = Vec::new();
            for &(x, y) in SAMPLE_TAUS.iter() {
                let tau = Complex64::new(x, y);
                let j = rho.j(tau).powi(-src.weight as i32);
                let lhs: Vec<Complex64> =
                    family_values(fam, &src.series, &src.big_us, ins, rho.act(tau))?.into_iter().map(|z| z * j).collect();
                let basis = family_values(&tgt, &dst.series, &dst.big_us, ins, tau)?;
                rows.push((basis, lhs));
            }
            Ok(rows)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_ins.into_iter().flatten().collect())
}

/// Fit `A` in `(c tau + d)^{-wt} Z_i(a; (u,v))(rho tau) = sum_j A_ij Z'_j(a; (u',v'))(tau)`
/// jointly over `insertions` and the sample points.
pub fn fit_a_matrix(rho: &Sl2, fam: &Family, insertions: &[Insertion], u: &[Rational], v: &[Rational], order: &Rational) -> Result<FitResult> {
    fit_matrix(&fit_rows(rho, fam, insertions, u, v, order)?)
}

/// Characteristic `u = e_1 / 5` used when plain traces cannot separate the
/// modules, e.g. `L + mu` and `L - mu` under an automorphism fixing every class.
pub fn probe_characteristic(d: usize) -> CartanVector {
    (0..d).map(|i| if i == 0 { rat(1, 5) } else { int(0) }).collect()
}

/// Fit from plain traces; if those are linearly dependent, add the rows of
/// the probe characteristic `(e_1/5, 0)`.
pub fn reference_fit(rho: &Sl2, fam: &Family, order: &Rational) -> Result<FitResult> {
    let d = fam.lattice.rank();
    let ins = fit_insertions(&fam.lattice);
    let zero = vec![int(0); d];
    let mut rows = fit_rows(rho, fam, &ins, &zero, &zero, order)?;
    match fit_matrix(&rows) {
        Err(Error::IllConditionedFit { .. }) => {
            rows.extend(fit_rows(rho, fam, &ins, &probe_characteristic(d), &zero, order)?);
            fit_matrix(&rows)
        }
        other => other,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MainTheoremReport {
    pub insertion: String,
    pub module_index: usize,
    pub u: Vec<String>,
    pub v: Vec<String>,
    pub target_u: Vec<String>,
    pub target_v: Vec<String>,
    #[serde(serialize_with = "ser_matrix")]
    pub a_matrix: Vec<Vec<Complex64>>,
    pub fit_residual: f64,
    pub condition: f64,
    pub rows: Vec<TransformReport>,
    /// Residual of the row belonging to the task's module.
    pub residual: f64,
    pub pass: bool,
}

pub(crate) fn ser_matrix<S: serde::Serializer>(m: &[Vec<Complex64>], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(m.len()))?;
    for row in m {
        let r: Vec<[String; 2]> = row.iter().map(|z| [format!("{:e}", z.re), format!("{:e}", z.im)]).collect();
        seq.serialize_element(&r)?;
    }
    seq.end()
}

fn strs(v: &[Rational]) -> Vec<String> {
    v.iter().map(format_rational).collect()
}

/// Check the transformation law of `Z` for the task's module under `rho`
/// with characteristics mapped to `(a u + c v, b u + d v)`.
pub fn verify_main_theorem(task: &ThetaTask, rho: &Sl2, tau: Complex64, tol: f64) -> Result<MainTheoremReport> {
    let (nu, nv) = transform_characteristics(rho, &task.u, &task.v);
    let fam = Family::new(task.module.lattice.clone(), task.module.sector_u0.clone(), task.module.stab_v0.clone())?;
    let fit = reference_fit(rho, &fam, &task.order)?;
    main_theorem_with(task, rho, tau, tol, &fam, &fit, &nu, &nv)
}

/// Same check against an arbitrary target characteristic pair and a given fit.
#[allow(clippy::too_many_arguments)]
pub fn main_theorem_with(
    task: &ThetaTask,
    rho: &Sl2,
    tau: Complex64,
    tol: f64,
    fam: &Family,
    fit: &FitResult,
    nu: &[Rational],
    nv: &[Rational],
) -> Result<MainTheoremReport> {
    check_tau(tau)?;
    let i0 = find_class(&fam.lambdas, &task.module.shift)
        .ok_or_else(|| Error::DimensionMismatch("module shift is not a discriminant class".into()))?;
    let tgt = fam.transformed(rho);
    let src = family_z(fam, &task.insertion, &task.u, &task.v, &task.order)?;
    let dst = family_z(&tgt, &task.insertion, nu, nv, &task.order)?;
    let j = rho.j(tau).powi(-src.weight as i32);
    let rtau = rho.act(tau);
    let mut rows = Vec::new();
    let tail_of = |s: &QSeries, bu: &CartanVector, t: Complex64| evaluate_z(s, &fam.lattice, bu, &task.insertion, t);
    let rhs_vals: Vec<Evaluation> =
        dst.series.iter().zip(&dst.big_us).map(|(s, bu)| tail_of(s, bu, tau)).collect::<Result<_>>()?;
    for i in 0..fam.len() {
        let l = tail_of(&src.series[i], &src.big_us[i], rtau)?;
        let mut rhs = Complex64::new(0.0, 0.0);
        let mut tail = l.tail_bound * j.norm();
        for (a, ev) in fit.matrix[i].iter().zip(&rhs_vals) {
            rhs += a * ev.value;
            tail += a.norm() * ev.tail_bound;
        }
        rows.push(TransformReport::new(format!("Z[{i}]"), *rho, tau, l.value * j, rhs, tail, tol)?);
    }
    let residual = rows[i0].residual;
    let pass = rows.iter().all(|r| r.pass);
    Ok(MainTheoremReport {
        insertion: task.insertion.to_string(),
        module_index: i0,
        u: strs(&task.u),
        v: strs(&task.v),
        target_u: strs(nu),
        target_v: strs(nv),
        a_matrix: fit.matrix.clone(),
        fit_residual: fit.residual,
        condition: fit.condition,
        rows,
        residual,
        pass,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct CorollaryReport {
    #[serde(serialize_with = "ser_matrix")]
    pub plain: Vec<Vec<Complex64>>,
    #[serde(serialize_with = "ser_matrix")]
    pub theta: Vec<Vec<Complex64>>,
    pub plain_residual: f64,
    pub theta_residual: f64,
    pub max_diff: f64,
    pub pass: bool,
}

/// Fit the transformation matrix from plain traces and from the `(u, v)`
/// theta basis and compare them entrywise.
pub fn verify_corollary(lat: &RationalLattice, u: &[Rational], v: &[Rational], rho: &Sl2, tol: f64, order: &Rational) -> Result<CorollaryReport> {
    let fam = Family::untwisted(lat.clone())?;
    let d = lat.rank();
    let ins = fit_insertions(lat);
    let plain = fit_a_matrix(rho, &fam, &ins, &vec![int(0); d], &vec![int(0); d], order)?;
    let theta = fit_a_matrix(rho, &fam, &ins, u, v, order)?;
    let max_diff = crate::fit::max_abs_diff(&plain.matrix, &theta.matrix);
    Ok(CorollaryReport {
        pass: max_diff < tol && plain.residual < tol && theta.residual < tol,
        plain_residual: plain.residual,
        theta_residual: theta.residual,
        plain: plain.matrix,
        theta: theta.matrix,
        max_diff,
    })
}

/// Modular data of `V_K`.
#[derive(Clone, Debug, Serialize)]
pub struct StData {
    pub classes: Vec<Vec<String>>,
    /// `zeta(|mu|^2/2 - d/24)` as exact cyclotomic numbers.
    pub t_exact: Vec<String>,
    #[serde(skip)]
    pub t_exact_cyclo: Vec<Cyclo>,
    #[serde(serialize_with = "ser_matrix")]
    pub s_gauss: Vec<Vec<Complex64>>,
    #[serde(serialize_with = "ser_matrix")]
    pub s_fit: Vec<Vec<Complex64>>,
    #[serde(serialize_with = "ser_matrix")]
    pub t_fit: Vec<Vec<Complex64>>,
    pub s_fit_residual: f64,
    pub t_fit_residual: f64,
    pub s_agreement: f64,
    pub t_agreement: f64,
}

pub fn s_t_matrices(k: &RationalLattice, order: &Rational) -> Result<StData> {
    let fam = Family::untwisted(k.clone())?;
    let d = k.rank() as i64;
    let n = fam.len();
    let t_exact_cyclo: Vec<Cyclo> =
        fam.lambdas.iter().map(|mu| Cyclo::zeta_of(&(k.norm(mu) / int(2) - rat(d, 24)))).collect();
    let disc = to_f64(&k.determinant()).abs();
    let s_gauss: Vec<Vec<Complex64>> = fam
        .lambdas
        .iter()
        .map(|mi| {
            fam.lambdas
                .iter()
                .map(|mj| Complex64::from_polar(disc.powf(-0.5), -2.0 * PI * to_f64(&k.pair(mi, mj))))
                .collect()
        })
        .collect();
    let s = reference_fit(&Sl2::S, &fam, order)?;
    let t = reference_fit(&Sl2::T, &fam, order)?;
    let t_diag: Vec<Vec<Complex64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { t_exact_cyclo[i].to_complex() } else { Complex64::new(0.0, 0.0) }).collect())
        .collect();
    Ok(StData {
        classes: fam.lambdas.iter().map(|m| strs(m)).collect(),
        t_exact: t_exact_cyclo.iter().map(|c| c.to_string()).collect(),
        t_agreement: crate::fit::max_abs_diff(&t.matrix, &t_diag),
        s_agreement: crate::fit::max_abs_diff(&s.matrix, &s_gauss),
        t_exact_cyclo,
        s_gauss,
        s_fit: s.matrix,
        t_fit: t.matrix,
        s_fit_residual: s.residual,
        t_fit_residual: t.residual,
    })
}

/// Plain trace of a charge-zero state of level at most two.
pub fn trace_of_state(module: &ModuleSpec, state: &FockState, order: &Rational) -> Result<QSeries> {
    let lat = &module.lattice;
    let d = lat.rank();
    let e = |i: usize| -> CartanVector { (0..d).map(|j| if i == j { int(1) } else { int(0) }).collect() };
    let mut out = QSeries::zero(order.clone());
    for (k, c) in &state.terms {
        if k.charge.iter().any(|x| !x.is_zero()) {
            return Err(Error::UnsupportedInsertion("charged state".into()));
        }
        let modes: Vec<(usize, i64)> = k.modes.iter().map(|(i, n)| (*i, n.to_integer().to_i64().unwrap())).collect();
        let z = match modes.as_slice() {
            [] => trace_function(module, &Insertion::Vacuum, order)?,
            [(i, 1)] => trace_function(module, &Insertion::Cartan(e(*i)), order)?,
            [(i, 1), (j, 1)] => {
                let bp = trace_function(module, &Insertion::BracketProduct(e(*i), e(*j)), order)?;
                let vac = trace_function(module, &Insertion::Vacuum, order)?;
                bp.add(&vac.scale(&(&lat.gram()[*i][*j] / int(12))))
            }
            _ => return Err(Error::UnsupportedInsertion(format!("no closed-form trace for {k:?}"))),
        };
        out = out.add(&z.scale(c));
    }
    Ok(out)
}

/// One power of `w = x - z` in the Zhu recurrence comparison.
#[derive(Clone, Debug)]
pub struct ZhuTerm {
    pub power: i64,
    pub token: i32,
    pub lhs: QSeries,
    pub rhs: QSeries,
    pub equal: bool,
}

#[derive(Clone, Debug)]
pub struct ZhuReport {
    pub terms: Vec<ZhuTerm>,
    pub all_equal: bool,
}

/// Two-point function `Tr Y(q_x^{L0} b, q_x) Y(q_z^{L0} a, q_z) q^{L0 - d/24}` for
/// Cartan `a`, `b`, against the recurrence
/// `S(b_[-1] a) - sum_{k>=2} E_{2k} S(b_[2k-1] a) + sum_{m>=0} (2 pi i)^{-m-1} wp_{m+1}(x - z) S(b_[m] a)`.
/// Coefficients of `w^p`, `-2 <= p <= w_order`, are compared after removing `(2 pi i)^p`.
pub fn zhu_recurrence_check(module: &ModuleSpec, b: &[Rational], a: &[Rational], w_order: i64, q_order: &Rational) -> Result<ZhuReport> {
    let lat = &module.lattice;
    lat.check_dim(a, "a")?;
    lat.check_dim(b, "b")?;
    if module.sector_u0.iter().any(|x| !x.is_zero()) || module.stab_v0.iter().any(|x| !x.is_zero()) {
        return Err(Error::IncompatibleSector("recurrence check uses untwisted modules".into()));
    }
    let d = lat.rank() as i64;
    let ab = lat.pair(a, b);
    let pmin = -2i64;
    let np = (w_order - pmin + 1) as usize;
    // Laurent coefficients of e^t/(e^t-1)^2: t^k -> -(k+1) B_{k+2} / (k+2)!
    let kappa: Vec<Rational> = (pmin..=w_order)
        .map(|k| -int(k + 1) * bernoulli((k + 2) as usize) / Rational::from_integer(factorial((k + 2) as u64)))
        .collect();
    let space = FockSpace::new(lat.clone());
    let cap = q_order + rat(d, 24);
    let kets = module_kets(module, &vec![int(0); d as usize], &cap)?;
    let shift = rat(d, 24);
    let per_ket: Vec<Vec<(Rational, Rational)>> = kets
        .par_iter()
        .map(|(ket, energy)| -> Result<Vec<(Rational, Rational)>> {
            let st = FockState::from_ket(ket.clone());
            let lvl = ket.level().to_integer().to_i64().unwrap();
            let mut coeffs: Vec<Rational> = kappa.iter().map(|k| k * &ab).collect();
            for m in -(lvl + 1)..=(lvl + 1) {
                let inner = space.apply_mode(a, &int(-m), &st)?;
                let dm = space.apply_mode(b, &int(m), &inner)?.coefficient(ket);
                let occ = if m > 0 { dm - int(m) * &ab } else { dm };
                if occ.is_zero() {
                    continue;
                }
                // y^{-m} = e^{-m t}
                for (idx, p) in (pmin..=w_order).enumerate() {
                    if p >= 0 {
                        let c = int(-m).pow(p as i32) / Rational::from_integer(factorial(p as u64));
                        coeffs[idx] += &occ * c;
                    }
                }
            }
            let e = energy - &shift;
            Ok(coeffs.into_iter().map(|c| (e.clone(), c)).collect())
        })
        .collect::<Result<_>>()?;
    let mut lhs_terms: Vec<Vec<(Rational, Cyclo)>> = vec![Vec::new(); np];
    for row in per_ket {
        for (idx, (e, c)) in row.into_iter().enumerate() {
            if !c.is_zero() {
                lhs_terms[idx].push((e, Cyclo::from_rational(c)));
            }
        }
    }
    let lhs: Vec<QSeries> = lhs_terms.into_iter().map(|t| QSeries::from_terms(t, q_order.clone())).collect::<Result<_>>()?;

    // right side: (power, token) -> series
    let bs = space.cartan_state(b)?;
    let as_ = space.cartan_state(a)?;
    let mut rhs: Vec<Option<(i32, QSeries)>> = vec![None; np];
    let mut add_rhs = |power: i64, token: i32, s: QSeries| -> Result<()> {
        if power < pmin || power > w_order || s.is_zero() {
            return Ok(());
        }
        let idx = (power - pmin) as usize;
        match &mut rhs[idx] {
            None => rhs[idx] = Some((token, s)),
            Some((t, acc)) => {
                if *t != token {
                    return Err(Error::TokenMismatch { power, lhs: *t, rhs: token });
                }
                *acc = acc.add(&s);
            }
        }
        Ok(())
    };
    let long = q_order + int(1) + rat(d, 24);
    let top = 1 + 1; // b_[m] a vanishes for m >= wt(a) + wt(b)
    let bm1 = space.bracket_mode(&bs, -1, &as_)?;
    add_rhs(0, 0, trace_of_state(module, &bm1, &long)?.truncate(q_order))?;
    let mut k = 2;
    while 2 * k - 1 < top {
        let st = space.bracket_mode(&bs, 2 * k - 1, &as_)?;
        if !st.is_zero() {
            let s = eisenstein_any((2 * k) as u32, &long).mul(&trace_of_state(module, &st, &long)?).neg();
            add_rhs(0, 0, s.truncate(q_order))?;
        }
        k += 1;
    }
    for m in 0..top {
        let st = space.bracket_mode(&bs, m, &as_)?;
        if st.is_zero() {
            continue;
        }
        let tr = trace_of_state(module, &st, &long)?;
        let wp = weierstrass_p(m + 1, w_order, &long)?;
        for t in wp.terms {
            add_rhs(t.power, t.token - (m as i32 + 1), t.series.mul(&tr).truncate(q_order))?;
        }
    }
    let mut terms = Vec::new();
    for (idx, l) in lhs.into_iter().enumerate() {
        let p = pmin + idx as i64;
        let (token, r) = match rhs[idx].take() {
            Some((t, s)) => {
                if t as i64 != p {
                    return Err(Error::TokenMismatch { power: p, lhs: p as i32, rhs: t });
                }
                (t, s)
            }
            None => (p as i32, QSeries::zero(q_order.clone())),
        };
        let equal = l.sub(&r).is_zero();
        terms.push(ZhuTerm { power: p, token, lhs: l, rhs: r, equal });
    }
    let all_equal = terms.iter().all(|t| t.equal);
    Ok(ZhuReport { terms, all_equal })
}
