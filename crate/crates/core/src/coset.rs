//! Lattice frames `K ⊂ L`: coset functions `X = eta^d Z`, their
//! transformation laws, theta decompositions and the vanishing of charged traces.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;
use serde_json::Value;

use crate::block::{s_t_matrices, z_budget, z_theta, Family, Insertion, ModuleSpec, StData, ThetaTask, SAMPLE_TAUS};
use crate::cyclo::Cyclo;
use crate::error::{Error, Result};
use crate::fit::{fit_matrix, FitResult};
use crate::lattice::{
    find_class, invert_matrix, mat_vec, parse_vector, theta_with_characteristics, CartanVector, LatticeCoset,
    RationalLattice,
};
use crate::modforms::{check_tau, eta_power, Sl2, TransformReport};
use crate::qseries::{Evaluation, GrowthBudget, QSeries};
use crate::rational::{frac, int, rat, Rational};

/// A sublattice `K ⊂ L` given by an embedding matrix whose columns are the
/// basis vectors of `K` in `L`-coordinates, with `L ⊂ K°`, plus shifts of `L`.
#[derive(Clone, Debug, PartialEq)]
pub struct CosetFrame {
    pub l: RationalLattice,
    pub k: RationalLattice,
    pub embedding: Vec<Vec<Rational>>,
    pub shifts: Vec<CartanVector>,
    embedding_inv: Vec<Vec<Rational>>,
}

impl CosetFrame {
    pub fn new(l: RationalLattice, k: RationalLattice, embedding: Vec<Vec<Rational>>, shifts: Vec<CartanVector>) -> Result<Self> {
        let dl = l.rank();
        let dk = k.rank();
        if dl != dk {
            return Err(Error::InvalidFrame(format!("rank of L ({dl}) and K ({dk}) differ")));
        }
        if embedding.len() != dl || embedding.iter().any(|r| r.len() != dk) {
            return Err(Error::InvalidFrame("embedding must be rank(L) x rank(K)".into()));
        }
        if embedding.iter().flatten().any(|x| !x.is_integer()) {
            return Err(Error::InvalidFrame("embedding must be integral".into()));
        }
        // Gram of K must be B^T G_L B
        for i in 0..dk {
            for j in 0..dk {
                let bi: Vec<Rational> = embedding.iter().map(|r| r[i].clone()).collect();
                let bj: Vec<Rational> = embedding.iter().map(|r| r[j].clone()).collect();
                if l.pair(&bi, &bj) != k.gram()[i][j] {
                    return Err(Error::InvalidFrame("K gram differs from the pulled-back L gram".into()));
                }
            }
        }
        let embedding_inv =
            invert_matrix(&embedding).ok_or_else(|| Error::InvalidFrame("embedding is singular".into()))?;
        let frame = CosetFrame { l, k, embedding, shifts, embedding_inv };
        for i in 0..dl {
            let e: Vec<Rational> = (0..dl).map(|j| if i == j { int(1) } else { int(0) }).collect();
            if !frame.in_k_dual(&e) {
                return Err(Error::InvalidFrame(format!("basis vector {i} of L is not in the dual of K")));
            }
        }
        for s in &frame.shifts {
            frame.l.check_dim(s, "shift")?;
            if !frame.in_k_dual(s) {
                return Err(Error::InvalidFrame("shift is not in the dual of K".into()));
            }
        }
        Ok(frame)
    }

    /// `L = K°` for a given even lattice `K`, with shifts covering `L/K`.
    pub fn dual_frame(k: &RationalLattice) -> Result<Self> {
        let inv = k.inverse_gram();
        let l = RationalLattice::new(inv.clone())?;
        // K-basis vector e_i equals sum_j G_ij f_j in the dual basis f_j
        let embedding: Vec<Vec<Rational>> = k.gram().to_vec();
        let d = k.rank();
        Self::new(l, k.clone(), embedding, vec![vec![int(0); d]])
    }

    /// `x` (L-coordinates) in `K-coordinates`.
    pub fn to_k(&self, x: &[Rational]) -> Vec<Rational> {
        mat_vec(&self.embedding_inv, x)
    }

    fn in_k_dual(&self, x: &[Rational]) -> bool {
        let y = self.to_k(x);
        self.k.pairing_with_basis(&y).iter().all(|v| v.is_integer())
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let l = RationalLattice::from_json(&v["L"])?;
        let k = RationalLattice::from_json(&v["K"])?;
        let embedding = v["embedding"]
            .as_array()
            .ok_or_else(|| Error::Parse("frame needs an \"embedding\" matrix".into()))?
            .iter()
            .map(parse_vector)
            .collect::<Result<Vec<_>>>()?;
        let shifts = match v.get("shifts").and_then(|s| s.as_array()) {
            Some(arr) => arr.iter().map(parse_vector).collect::<Result<Vec<_>>>()?,
            None => vec![vec![int(0); l.rank()]],
        };
        Self::new(l, k, embedding, shifts)
    }
}

/// `X = eta^d Z`.
pub fn x_trace(task: &ThetaTask) -> Result<QSeries> {
    let d = task.module.rank() as i64;
    let z = z_theta(&ThetaTask { order: &task.order + rat(d, 24), ..task.clone() })?;
    let eta = eta_power(d, &(&task.order - z.offset()).max(rat(d, 24) + int(1)))?;
    Ok(z.mul(&eta).truncate(&task.order))
}

/// Coefficient budget for `X`: a weighted theta series.
fn x_budget(lat: &RationalLattice, ins: &Insertion) -> GrowthBudget {
    let d = lat.rank();
    let base = z_budget(lat, &vec![int(0); d], ins);
    GrowthBudget::new(base.constant, base.ratio)
}

pub fn evaluate_x(s: &QSeries, lat: &RationalLattice, ins: &Insertion, tau: Complex64) -> Result<Evaluation> {
    s.evaluate(tau, &x_budget(lat, ins))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum FinalLaw {
    S,
    T,
}

/// Transformation laws of `X` over the modules `V_{K+mu}`:
/// `X(tau+1) = e^{pi i d/12} sum T X(u, u+v)` and
/// `X(-1/tau) = (-i tau)^{d/2} tau^{wt} sum S X(v, -u)`.
#[allow(clippy::too_many_arguments)]
pub fn verify_final_theorem(
    frame: &CosetFrame,
    st: &StData,
    class: usize,
    insertion: &Insertion,
    u: &[Rational],
    v: &[Rational],
    law: FinalLaw,
    tau: Complex64,
    order: &Rational,
    tol: f64,
) -> Result<TransformReport> {
    check_tau(tau)?;
    let k = &frame.k;
    let d = k.rank() as i64;
    let fam = Family::untwisted(k.clone())?;
    let (wt, nu, nv, rho) = match law {
        FinalLaw::T => (0, u.to_vec(), u.iter().zip(v).map(|(a, b)| a + b).collect::<Vec<_>>(), Sl2::T),
        FinalLaw::S => (0, v.to_vec(), u.iter().map(|a| -a.clone()).collect::<Vec<_>>(), Sl2::S),
    };
    let wt = insertion.bracket_weight().unwrap_or(2).max(wt);
    let xs = |uu: &[Rational], vv: &[Rational]| -> Result<Vec<QSeries>> {
        (0..fam.len())
            .map(|j| {
                let task = ThetaTask::new(fam.module(j), insertion.clone(), uu.to_vec(), vv.to_vec(), order.clone())?;
                x_trace(&task)
            })
            .collect()
    };
    let src = xs(u, v)?;
    let dst = xs(&nu, &nv)?;
    let (lhs_tau, factor, mat): (Complex64, Complex64, Vec<Vec<Complex64>>) = match law {
        FinalLaw::T => {
            let t: Vec<Vec<Complex64>> = (0..fam.len())
                .map(|i| {
                    (0..fam.len())
                        .map(|j| if i == j { st.t_exact_cyclo[i].to_complex() } else { Complex64::new(0.0, 0.0) })
                        .collect()
                })
                .collect();
            (tau + 1.0, Complex64::from_polar(1.0, PI * d as f64 / 12.0), t)
        }
        FinalLaw::S => {
            let f = (Complex64::new(0.0, -1.0) * tau).powf(d as f64 / 2.0) * tau.powi(wt as i32);
            (-tau.inv(), f, st.s_fit.clone())
        }
    };
    let l = evaluate_x(&src[class], k, insertion, lhs_tau)?;
    let mut rhs = Complex64::new(0.0, 0.0);
    let mut tail = l.tail_bound;
    for (j, s) in dst.iter().enumerate() {
        let ev = evaluate_x(s, k, insertion, tau)?;
        rhs += mat[class][j] * ev.value;
        tail += (factor * mat[class][j]).norm() * ev.tail_bound;
    }
    TransformReport::new(format!("X[{class}]"), rho, tau, l.value, factor * rhs, tail, tol)
}

/// Exact T-law: coefficients of `X(u, v)` shifted by `zeta(e)` must equal
/// `e^{pi i d/12} T_ii X(u, u+v)`.
pub fn verify_final_t_exact(frame: &CosetFrame, st: &StData, class: usize, insertion: &Insertion, u: &[Rational], v: &[Rational], order: &Rational) -> Result<bool> {
    let k = &frame.k;
    let d = k.rank() as i64;
    let fam = Family::untwisted(k.clone())?;
    let uv: Vec<Rational> = u.iter().zip(v).map(|(a, b)| a + b).collect();
    let lhs = x_trace(&ThetaTask::new(fam.module(class), insertion.clone(), u.to_vec(), v.to_vec(), order.clone())?)?.translate_tau();
    let rhs = x_trace(&ThetaTask::new(fam.module(class), insertion.clone(), u.to_vec(), uv, order.clone())?)?;
    let factor = &Cyclo::zeta_of(&rat(d, 24)) * &st.t_exact_cyclo[class];
    Ok(lhs.sub(&rhs.scale_by(&factor)).is_zero())
}

/// One class `mu` of `(L + lambda) / K` with its partial theta sum.
#[derive(Clone, Debug)]
pub struct ThetaClass {
    /// Class representative in `K`-coordinates.
    pub mu: CartanVector,
    pub class_sum: QSeries,
    pub theta_k: QSeries,
    /// `class_sum / theta_{K+mu}`
    pub ch: QSeries,
}

#[derive(Clone, Debug)]
pub struct ThetaDecomposition {
    pub classes: Vec<ThetaClass>,
    pub total: QSeries,
    pub reassembly_exact: bool,
}

/// Split `theta_{L+lambda}` into classes modulo `K` and divide each class by
/// the corresponding `K`-theta function.
pub fn theta_decompose(frame: &CosetFrame, shift_index: usize, order: &Rational) -> Result<ThetaDecomposition> {
    let lam = frame
        .shifts
        .get(shift_index)
        .ok_or_else(|| Error::DimensionMismatch(format!("no shift with index {shift_index}")))?;
    let d = frame.l.rank();
    let zero = vec![int(0); d];
    let coset = LatticeCoset::new(frame.l.clone(), lam.clone())?;
    let total = theta_with_characteristics(&coset, &zero, &zero, order)?;
    let mut buckets: BTreeMap<Vec<Rational>, Vec<(Rational, Cyclo)>> = BTreeMap::new();
    for p in frame.l.enumerate_by_norm(&coset, &zero, order) {
        let y = frame.to_k(&p.coords);
        let mu: Vec<Rational> = y.iter().map(frac).collect();
        buckets.entry(mu).or_default().push((p.shifted_norm, Cyclo::one()));
    }
    let mut classes = Vec::new();
    let mut reassembled = QSeries::zero(order.clone());
    for (mu, terms) in buckets {
        let class_sum = QSeries::from_terms(terms, order.clone())?;
        let theta_k = theta_with_characteristics(&LatticeCoset::new(frame.k.clone(), mu.clone())?, &zero, &zero, order)?;
        if theta_k.is_zero() {
            return Err(Error::NonInvertibleThetaLeading(format!("{mu:?}")));
        }
        let ch = class_sum.mul(&theta_k.invert()?);
        reassembled = reassembled.add(&ch.mul(&theta_k));
        classes.push(ThetaClass { mu, class_sum, theta_k, ch });
    }
    let common = reassembled.trunc().clone().min(total.trunc().clone());
    let reassembly_exact = reassembled.truncate(&common).sub(&total.truncate(&common)).is_zero();
    Ok(ThetaDecomposition { classes, total, reassembly_exact })
}

#[derive(Clone, Debug)]
pub struct VanishingReport {
    pub charge: CartanVector,
    pub trace: QSeries,
    pub vanishes: bool,
    pub kets: usize,
}

/// Literal trace of a charge-`alpha` insertion over the Fock basis of
/// `V_{L+lambda}` below the energy cap. The operator sends `|beta; N>` to
/// `|beta + alpha; N>`, so only diagonal entries contribute.
pub fn vanishing_check(module: &ModuleSpec, alpha: &[Rational], cap: &Rational) -> Result<VanishingReport> {
    let lat = &module.lattice;
    lat.check_dim(alpha, "charge")?;
    let d = lat.rank();
    let coset = LatticeCoset::new(lat.clone(), module.shift.clone())?;
    let pts = lat.enumerate_by_norm(&coset, &vec![int(0); d], cap);
    let mut terms = Vec::new();
    let mut kets = 0;
    for p in &pts {
        let target: Vec<Rational> = p.coords.iter().zip(alpha).map(|(a, b)| a + b).collect();
        let room = cap - &p.shifted_norm;
        let mut level = 0i64;
        while int(level) < room {
            let n = partitions_colored(d, level);
            kets += n;
            if target == p.coords {
                terms.push((&p.shifted_norm + int(level) - rat(d as i64, 24), Cyclo::from_int(n as i64)));
            }
            level += 1;
        }
    }
    let trace = QSeries::from_terms(terms, cap - rat(d as i64, 24))?;
    Ok(VanishingReport { charge: alpha.to_vec(), vanishes: trace.is_zero(), trace, kets })
}

/// Number of `d`-colored partitions of `n`.
fn partitions_colored(d: usize, n: i64) -> usize {
    let n = n as usize;
    let mut c = vec![0usize; n + 1];
    c[0] = 1;
    for part in 1..=n {
        for _ in 0..d {
            for k in part..=n {
                c[k] += c[k - part];
            }
        }
    }
    c[n]
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeReport {
    #[serde(serialize_with = "crate::block::ser_matrix")]
    pub coefficients: Vec<Vec<Complex64>>,
    pub residual: f64,
    pub condition: f64,
    pub note: String,
}

/// Non-asserting probe: fit `ch_i(-1/tau) ~ sum_j c_ij ch_j(tau)` for the
/// frame's decomposition multiplicities and report the residual.
pub fn s_closure_probe(frame: &CosetFrame, order: &Rational) -> Result<ProbeReport> {
    let mut chars: Vec<QSeries> = Vec::new();
    for i in 0..frame.shifts.len() {
        let dec = theta_decompose(frame, i, order)?;
        let mut sum = QSeries::zero(order.clone());
        for c in &dec.classes {
            sum = sum.add(&c.ch);
        }
        chars.push(sum);
    }
    let budget = GrowthBudget::dominating(|e| (e + 2.0).powi(2) * 1e3, std::f64::consts::E);
    let mut rows = Vec::new();
    for &(x, y) in SAMPLE_TAUS.iter() {
        let tau = Complex64::new(x, y);
        let basis: Vec<Complex64> = chars.iter().map(|c| c.evaluate(tau, &budget).map(|e| e.value)).collect::<Result<_>>()?;
        let target: Vec<Complex64> =
            chars.iter().map(|c| c.evaluate(-tau.inv(), &budget).map(|e| e.value)).collect::<Result<_>>()?;
        rows.push((basis, target));
    }
    let (coefficients, residual, condition, note) = match fit_matrix(&rows) {
        Ok(FitResult { matrix, residual, condition }) => (matrix, residual, condition, "fit computed".to_string()),
        Err(e) => (Vec::new(), f64::NAN, f64::NAN, e.to_string()),
    };
    Ok(ProbeReport { coefficients, residual, condition, note })
}

/// Modular data of `K` used by the coset laws.
pub fn frame_st(frame: &CosetFrame, order: &Rational) -> Result<StData> {
    s_t_matrices(&frame.k, order)
}

/// Index of `mu` (K-coordinates) among the discriminant classes of `K`.
pub fn k_class_index(frame: &CosetFrame, mu: &[Rational]) -> Result<usize> {
    let fam = Family::untwisted(frame.k.clone())?;
    find_class(&fam.lambdas, mu).ok_or_else(|| Error::DimensionMismatch("not a class of K".into()))
}
