//! Rational lattices, coset enumeration, theta series with characteristics
//! and discriminant groups.

use num::{BigInt, One, ToPrimitive, Zero};
use serde_json::{json, Value};

use crate::cyclo::Cyclo;
use crate::error::{Error, Result};
use crate::qseries::{json_str, GrowthBudget, QSeries};
use crate::rational::{format_rational, frac, int, parse_rational, to_f64, Rational};

/// Vector in `Q^d`, written in the coordinates of the lattice basis.
pub type CartanVector = Vec<Rational>;

/// Lattice `Z^d` with a positive definite rational Gram matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct RationalLattice {
    gram: Vec<Vec<Rational>>,
    /// LDL^T factorization: unit lower `l` and diagonal `diag`.
    l: Vec<Vec<Rational>>,
    diag: Vec<Rational>,
    pub basis_names: Option<Vec<String>>,
}

impl RationalLattice {
    pub fn new(gram: Vec<Vec<Rational>>) -> Result<Self> {
        let d = gram.len();
        if d == 0 || gram.iter().any(|r| r.len() != d) {
            return Err(Error::DimensionMismatch("Gram matrix must be square and nonempty".into()));
        }
        for i in 0..d {
            for j in 0..i {
                if gram[i][j] != gram[j][i] {
                    return Err(Error::DimensionMismatch("Gram matrix must be symmetric".into()));
                }
            }
        }
        let (l, diag) = ldl(&gram).ok_or(Error::NotPositiveDefinite)?;
        Ok(RationalLattice { gram, l, diag, basis_names: None })
    }

    pub fn from_ints(g: &[&[i64]]) -> Result<Self> {
        Self::new(g.iter().map(|r| r.iter().map(|&x| int(x)).collect()).collect())
    }

    pub fn diagonal(entries: &[i64]) -> Result<Self> {
        let d = entries.len();
        Self::new((0..d).map(|i| (0..d).map(|j| if i == j { int(entries[i]) } else { int(0) }).collect()).collect())
    }

    pub fn rank(&self) -> usize {
        self.gram.len()
    }

    pub fn gram(&self) -> &[Vec<Rational>] {
        &self.gram
    }

    pub fn pair(&self, x: &[Rational], y: &[Rational]) -> Rational {
        let mut s = Rational::zero();
        for (i, xi) in x.iter().enumerate() {
            if xi.is_zero() {
                continue;
            }
            for (j, yj) in y.iter().enumerate() {
                if !yj.is_zero() && !self.gram[i][j].is_zero() {
                    s += xi * &self.gram[i][j] * yj;
                }
            }
        }
        s
    }

    pub fn norm(&self, x: &[Rational]) -> Rational {
        self.pair(x, x)
    }

    /// `(G x)_j = <x, e_j>`.
    pub fn pairing_with_basis(&self, x: &[Rational]) -> Vec<Rational> {
        (0..self.rank()).map(|j| (0..self.rank()).map(|i| &x[i] * &self.gram[i][j]).sum()).collect()
    }

    pub fn determinant(&self) -> Rational {
        self.diag.iter().fold(Rational::one(), |a, b| a * b)
    }

    pub fn inverse_gram(&self) -> Vec<Vec<Rational>> {
        invert_matrix(&self.gram).expect("positive definite matrices are invertible")
    }

    pub fn check_dim(&self, v: &[Rational], what: &str) -> Result<()> {
        if v.len() != self.rank() {
            return Err(Error::DimensionMismatch(format!("{what} has length {}, lattice rank {}", v.len(), self.rank())));
        }
        Ok(())
    }

    pub fn is_integral(&self) -> bool {
        self.gram.iter().flatten().all(|x| x.is_integer())
    }

    pub fn is_even(&self) -> bool {
        self.is_integral() && (0..self.rank()).all(|i| (self.gram[i][i].to_integer() % BigInt::from(2)).is_zero())
    }

    /// Smallest eigenvalue lower bound: `1 / tr(G^{-1})` (positive definite case).
    pub fn min_eigen_bound(&self) -> f64 {
        let inv = self.inverse_gram();
        let tr: f64 = (0..self.rank()).map(|i| to_f64(&inv[i][i])).sum();
        1.0 / tr
    }

    /// Points `alpha` of the coset with `<alpha + u, alpha + u> / 2 < bound`,
    /// sorted lexicographically by coordinates.
    pub fn enumerate_by_norm(&self, coset: &LatticeCoset, u: &[Rational], bound: &Rational) -> Vec<LatticePoint> {
        let d = self.rank();
        // alpha + u = n + c with n integral, c = shift + u
        let c: Vec<Rational> = coset.shift.iter().zip(u).map(|(s, x)| s + x).collect();
        let target = bound * int(2);
        let mut out = Vec::new();
        let mut n = vec![int(0); d];
        self.fp_recurse(d, &c, &target, &mut n, &Rational::zero(), &mut out);
        let mut pts: Vec<LatticePoint> = out
            .into_iter()
            .map(|n| {
                let alpha: Vec<Rational> = n.iter().zip(&coset.shift).map(|(a, s)| a + s).collect();
                let beta: Vec<Rational> = alpha.iter().zip(u).map(|(a, x)| a + x).collect();
                let shifted_norm = self.norm(&beta) / int(2);
                LatticePoint { coords: alpha, shifted_norm }
            })
            .collect();
        pts.sort_by(|a, b| a.coords.cmp(&b.coords));
        pts
    }

    /// Fincke-Pohst over coordinates `k = d-1, ..., 0` using `|y|^2 = sum diag_k t_k^2`
    /// with `t_k = y_k + sum_{j>k} l_{jk} y_j` and `y = n + c`.
    fn fp_recurse(
        &self,
        k: usize,
        c: &[Rational],
        target: &Rational,
        n: &mut Vec<Rational>,
        partial: &Rational,
        out: &mut Vec<Vec<Rational>>,
    ) {
        if k == 0 {
            if partial < target {
                out.push(n.clone());
            }
            return;
        }
        let k = k - 1;
        let d = self.rank();
        let mut center = c[k].clone();
        for j in k + 1..d {
            center += &self.l[j][k] * (&n[j] + &c[j]);
        }
        let room = target - partial;
        if room <= Rational::zero() {
            return;
        }
        let radius = (to_f64(&room) / to_f64(&self.diag[k])).sqrt();
        let cf = to_f64(&center);
        let lo = (-cf - radius).floor() as i64 - 1;
        let hi = (-cf + radius).ceil() as i64 + 1;
        for v in lo..=hi {
            let t = int(v) + &center;
            let p = partial + &self.diag[k] * &t * &t;
            if p < *target {
                n[k] = int(v);
                self.fp_recurse(k, c, target, n, &p, out);
            }
        }
        n[k] = int(0);
    }

    pub fn to_json(&self) -> Value {
        let mut v = json!({
            "gram": self.gram.iter().map(|r| r.iter().map(format_rational).collect::<Vec<_>>()).collect::<Vec<_>>(),
        });
        if let Some(names) = &self.basis_names {
            v["basis_names"] = json!(names);
        }
        v
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let rows = v["gram"].as_array().ok_or_else(|| Error::Parse("lattice needs a \"gram\" matrix".into()))?;
        let gram = rows
            .iter()
            .map(|r| {
                r.as_array()
                    .ok_or_else(|| Error::Parse("gram rows must be lists".into()))?
                    .iter()
                    .map(|x| parse_rational(json_str(x)?))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let mut l = Self::new(gram)?;
        if let Some(names) = v.get("basis_names").and_then(|n| n.as_array()) {
            let names: Vec<String> = names.iter().filter_map(|x| x.as_str().map(String::from)).collect();
            if names.len() != l.rank() {
                return Err(Error::DimensionMismatch("basis_names length".into()));
            }
            l.basis_names = Some(names);
        }
        Ok(l)
    }
}

pub fn parse_vector(v: &Value) -> Result<CartanVector> {
    v.as_array()
        .ok_or_else(|| Error::Parse(format!("expected a list of rationals, got {v}")))?
        .iter()
        .map(|x| parse_rational(json_str(x)?))
        .collect()
}

pub fn vector_json(v: &[Rational]) -> Value {
    json!(v.iter().map(format_rational).collect::<Vec<_>>())
}

fn ldl(g: &[Vec<Rational>]) -> Option<(Vec<Vec<Rational>>, Vec<Rational>)> {
    let d = g.len();
    let mut l = vec![vec![Rational::zero(); d]; d];
    let mut diag = vec![Rational::zero(); d];
    for j in 0..d {
        let mut dj = g[j][j].clone();
        for k in 0..j {
            dj -= &l[j][k] * &l[j][k] * &diag[k];
        }
        if dj <= Rational::zero() {
            return None;
        }
        diag[j] = dj;
        l[j][j] = Rational::one();
        for i in j + 1..d {
            let mut s = g[i][j].clone();
            for k in 0..j {
                s -= &l[i][k] * &l[j][k] * &diag[k];
            }
            l[i][j] = s / &diag[j];
        }
    }
    Some((l, diag))
}

pub fn invert_matrix(m: &[Vec<Rational>]) -> Option<Vec<Vec<Rational>>> {
    let d = m.len();
    let mut a: Vec<Vec<Rational>> = m
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend((0..d).map(|j| if i == j { int(1) } else { int(0) }));
            row
        })
        .collect();
    for col in 0..d {
        let piv = (col..d).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, piv);
        let p = a[col][col].clone();
        for x in a[col].iter_mut() {
            *x /= &p;
        }
        for r in 0..d {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                let pivot_row = a[col].clone();
                for (x, y) in a[r].iter_mut().zip(&pivot_row) {
                    *x -= &f * y;
                }
            }
        }
    }
    Some(a.into_iter().map(|r| r[d..].to_vec()).collect())
}

pub fn mat_vec(m: &[Vec<Rational>], v: &[Rational]) -> Vec<Rational> {
    m.iter().map(|r| r.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

/// `L + shift`, with the shift reduced to `[0, 1)^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeCoset {
    pub lattice: RationalLattice,
    pub shift: CartanVector,
}

impl LatticeCoset {
    pub fn new(lattice: RationalLattice, shift: CartanVector) -> Result<Self> {
        lattice.check_dim(&shift, "shift")?;
        let shift = shift.iter().map(frac).collect();
        Ok(LatticeCoset { lattice, shift })
    }

    pub fn rank(&self) -> usize {
        self.lattice.rank()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LatticePoint {
    pub coords: CartanVector,
    /// `<alpha + u, alpha + u> / 2`
    pub shifted_norm: Rational,
}

/// Polynomial weight attached to each lattice point in a theta sum.
#[derive(Clone, Debug, PartialEq)]
pub enum ThetaWeight {
    One,
    /// `<h, alpha + u>`
    Linear(CartanVector),
    /// `<h, alpha + u> <k, alpha + u>`
    Quadratic(CartanVector, CartanVector),
}

/// `e^{pi i <u,v>} sum_{alpha in coset} zeta(<v, alpha>) q^{|alpha + u|^2 / 2}`.
pub fn theta_with_characteristics(coset: &LatticeCoset, u: &[Rational], v: &[Rational], order: &Rational) -> Result<QSeries> {
    weighted_theta(coset, u, v, &[], &ThetaWeight::One, order)
}

/// General weighted theta sum
/// `e^{pi i <u,v>} sum_alpha P(alpha + u) zeta(<v, alpha> + <w, alpha>) q^{|alpha+u|^2/2}`;
/// `extra_phase` is the vector `w` (empty for none).
pub fn weighted_theta(
    coset: &LatticeCoset,
    u: &[Rational],
    v: &[Rational],
    extra_phase: &[Rational],
    weight: &ThetaWeight,
    order: &Rational,
) -> Result<QSeries> {
    let lat = &coset.lattice;
    lat.check_dim(u, "u")?;
    lat.check_dim(v, "v")?;
    let pts = lat.enumerate_by_norm(coset, u, order);
    let pref = lat.pair(u, v) / int(2);
    let mut terms = Vec::with_capacity(pts.len());
    for p in pts {
        let beta: Vec<Rational> = p.coords.iter().zip(u).map(|(a, x)| a + x).collect();
        let w = match weight {
            ThetaWeight::One => int(1),
            ThetaWeight::Linear(h) => lat.pair(h, &beta),
            ThetaWeight::Quadratic(h, k) => lat.pair(h, &beta) * lat.pair(k, &beta),
        };
        if w.is_zero() {
            continue;
        }
        let mut phase = lat.pair(v, &p.coords) + &pref;
        if !extra_phase.is_empty() {
            phase += lat.pair(extra_phase, &p.coords);
        }
        terms.push((p.shifted_norm, Cyclo::zeta_of(&phase).scale(&w)));
    }
    QSeries::from_terms(terms, order.clone())
}

/// Coefficient budget for a weighted theta series times `eta^{-d}`.
pub fn theta_budget(lat: &RationalLattice, u: &[Rational], weight: &ThetaWeight, eta_power: i64) -> GrowthBudget {
    let d = lat.rank() as f64;
    let lmin = lat.min_eigen_bound();
    let un = to_f64(&lat.norm(u)).sqrt();
    let hn = |h: &CartanVector| to_f64(&lat.norm(h)).sqrt();
    let (w1, w2) = match weight {
        ThetaWeight::One => (0.0, 0.0),
        ThetaWeight::Linear(h) => (hn(h), 0.0),
        ThetaWeight::Quadratic(h, k) => (hn(h), hn(k)),
    };
    let a = eta_power.unsigned_abs() as f64;
    GrowthBudget::dominating(
        move |e| {
            let e = e.max(0.0) + 1.0;
            // lattice vectors with |alpha + u|^2 < 2e lie in a ball of radius sqrt(2e)+|u|
            let r = (2.0 * e).sqrt() + un;
            let count = (2.0 * r / lmin.sqrt() + 1.0).powf(d);
            let p = match weight_kind(w1, w2) {
                0 => 1.0,
                1 => w1 * (2.0 * e).sqrt(),
                _ => w1 * w2 * 2.0 * e,
            };
            count * p * (std::f64::consts::PI * (2.0 * a * e / 3.0).sqrt()).exp()
        },
        std::f64::consts::E,
    )
}

fn weight_kind(w1: f64, w2: f64) -> u8 {
    if w1 == 0.0 && w2 == 0.0 {
        0
    } else if w2 == 0.0 {
        1
    } else {
        2
    }
}

/// Discriminant group `K° / K` of an even integral lattice.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscriminantData {
    pub dual_gram: Vec<Vec<Rational>>,
    /// Representatives `mu` in lattice coordinates, entries in `[0, 1)`.
    pub representatives: Vec<CartanVector>,
}

/// Requires an even integral lattice. Representatives come from the Hermite
/// normal form of the Gram matrix.
pub fn discriminant_data(k: &RationalLattice) -> Result<DiscriminantData> {
    if !k.is_even() {
        return Err(Error::NotEvenIntegral(format!("{:?}", k.gram())));
    }
    let d = k.rank();
    let g: Vec<Vec<i128>> =
        k.gram().iter().map(|r| r.iter().map(|x| x.to_integer().to_i128().expect("gram entry too large")).collect()).collect();
    let h = hermite_lower(&g);
    let inv = k.inverse_gram();
    let mut reps = Vec::new();
    let diag: Vec<i128> = (0..d).map(|i| h[i][i]).collect();
    let mut y = vec![0i128; d];
    loop {
        let yr: Vec<Rational> = y.iter().map(|&x| int(x as i64)).collect();
        let mu: Vec<Rational> = mat_vec(&inv, &yr).iter().map(frac).collect();
        reps.push(mu);
        let mut i = 0;
        loop {
            if i == d {
                reps.sort();
                return Ok(DiscriminantData { dual_gram: inv, representatives: reps });
            }
            y[i] += 1;
            if y[i] < diag[i] {
                break;
            }
            y[i] = 0;
            i += 1;
        }
    }
}

/// Column-style Hermite form: lower triangular `H` with positive diagonal
/// spanning the same lattice as the columns of `m`.
fn hermite_lower(m: &[Vec<i128>]) -> Vec<Vec<i128>> {
    let d = m.len();
    let mut a = m.to_vec();
    for i in 0..d {
        // gcd-combine columns i..d on row i
        for j in i + 1..d {
            while a[i][j] != 0 {
                let q = a[i][i].div_euclid(a[i][j]);
                for r in 0..d {
                    a[r][i] -= q * a[r][j];
                }
                for r in 0..d {
                    a[r].swap(i, j);
                }
            }
        }
        if a[i][i] < 0 {
            for r in 0..d {
                a[r][i] = -a[r][i];
            }
        }
    }
    a
}

/// Index of `mu` among representatives (comparison modulo `Z^d`).
pub fn find_class(reps: &[CartanVector], mu: &[Rational]) -> Option<usize> {
    let m: Vec<Rational> = mu.iter().map(frac).collect();
    reps.iter().position(|r| *r == m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn a1_enumeration() {
        let l = RationalLattice::from_ints(&[&[2]]).unwrap();
        let c = LatticeCoset::new(l.clone(), vec![int(0)]).unwrap();
        let pts = l.enumerate_by_norm(&c, &[int(0)], &int(5));
        let coords: Vec<_> = pts.iter().map(|p| p.coords[0].clone()).collect();
        assert_eq!(coords, vec![int(-2), int(-1), int(0), int(1), int(2)]);
    }

    #[test]
    fn strict_bound_excludes_boundary() {
        let l = RationalLattice::from_ints(&[&[2]]).unwrap();
        let c = LatticeCoset::new(l.clone(), vec![int(0)]).unwrap();
        let pts = l.enumerate_by_norm(&c, &[int(0)], &int(4));
        assert_eq!(pts.len(), 3);
    }

    #[test]
    fn a2_discriminant_has_three_classes() {
        let l = RationalLattice::from_ints(&[&[2, -1], &[-1, 2]]).unwrap();
        let d = discriminant_data(&l).unwrap();
        assert_eq!(d.representatives.len(), 3);
    }

    #[test]
    fn odd_lattice_rejected() {
        let l = RationalLattice::from_ints(&[&[1]]).unwrap();
        assert!(matches!(discriminant_data(&l), Err(Error::NotEvenIntegral(_))));
    }

    #[test]
    fn not_positive_definite() {
        assert!(matches!(RationalLattice::from_ints(&[&[1, 2], &[2, 1]]), Err(Error::NotPositiveDefinite)));
    }

    #[test]
    fn hermite_of_a2() {
        let h = hermite_lower(&[vec![2, -1], vec![-1, 2]]);
        assert_eq!(h[0][1], 0);
        assert_eq!(h[0][0] * h[1][1], 3);
    }
}
