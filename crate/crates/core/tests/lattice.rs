use std::collections::BTreeSet;

use proptest::prelude::*;
use voatheta::lattice::*;
use voatheta::rational::{frac, int, rat, to_f64};
use voatheta::{Cyclo, Error, Rational};

fn a1() -> RationalLattice {
    RationalLattice::from_ints(&[&[2]]).unwrap()
}

/// Scan the coordinate box `|y_i + u_i| <= R` with `R` from a Gershgorin eigenvalue bound.
fn box_oracle(lat: &RationalLattice, shift: &[Rational], u: &[Rational], bound: &Rational) -> Vec<(Vec<Rational>, Rational)> {
    let g = lat.gram();
    let d = g.len();
    let lmin = (0..d)
        .map(|i| to_f64(&g[i][i]) - (0..d).filter(|&j| j != i).map(|j| to_f64(&g[i][j]).abs()).sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    assert!(lmin > 0.0);
    let r = ((2.0 * to_f64(bound) / lmin).sqrt() + 2.0).ceil() as i64;
    let center: Vec<i64> = u.iter().map(|x| -x.floor().to_integer().to_string().parse::<i64>().unwrap()).collect();
    let mut out = Vec::new();
    let mut idx = vec![-r; d];
    loop {
        let alpha: Vec<Rational> =
            idx.iter().zip(shift).zip(&center).map(|((&n, s), &c)| int(n + c) + frac(s)).collect();
        let beta: Vec<Rational> = alpha.iter().zip(u).map(|(a, x)| a + x).collect();
        let n = lat.norm(&beta) / int(2);
        if &n < bound {
            out.push((alpha, n));
        }
        let mut i = d;
        loop {
            if i == 0 {
                out.sort();
                return out;
            }
            i -= 1;
            idx[i] += 1;
            if idx[i] <= r {
                break;
            }
            idx[i] = -r;
        }
    }
}

fn enumerate(lat: &RationalLattice, shift: &[Rational], u: &[Rational], bound: &Rational) -> Vec<(Vec<Rational>, Rational)> {
    let c = LatticeCoset::new(lat.clone(), shift.to_vec()).unwrap();
    lat.enumerate_by_norm(&c, u, bound).into_iter().map(|p| (p.coords, p.shifted_norm)).collect()
}

fn coeffs(s: &voatheta::qseries::QSeries, n: i64) -> Vec<Cyclo> {
    (0..n).map(|e| s.coefficient(&int(e)).unwrap_or_else(Cyclo::zero)).collect()
}

#[test]
fn enumeration_examples() {
    let got = enumerate(&a1(), &[int(0)], &[int(0)], &int(3));
    assert_eq!(got, vec![(vec![int(-1)], int(1)), (vec![int(0)], int(0)), (vec![int(1)], int(1))]);
    let half = enumerate(&a1(), &[rat(1, 2)], &[int(0)], &int(2));
    assert_eq!(half, vec![(vec![rat(-1, 2)], rat(1, 4)), (vec![rat(1, 2)], rat(1, 4))]);
    let shift = [rat(1, 3)];
    let cancel = enumerate(&a1(), &shift, &[rat(-1, 3)], &int(1));
    assert!(cancel.iter().any(|(_, n)| *n == int(0)));
}

#[test]
fn theta_examples() {
    let c = LatticeCoset::new(a1(), vec![int(0)]).unwrap();
    let t = theta_with_characteristics(&c, &[int(0)], &[int(0)], &int(10)).unwrap();
    let z = Cyclo::zero();
    let two = Cyclo::from_int(2);
    let one = Cyclo::one();
    assert_eq!(coeffs(&t, 10), vec![one.clone(), two.clone(), z.clone(), z.clone(), two.clone(), z.clone(), z.clone(), z.clone(), z.clone(), two]);
    let alt = theta_with_characteristics(&c, &[int(0)], &[rat(1, 4)], &int(5)).unwrap();
    let m2 = Cyclo::from_int(-2);
    assert_eq!(coeffs(&alt, 5), vec![one, m2, z.clone(), z, Cyclo::from_int(2)]);
}

#[test]
fn discriminant_examples() {
    let d = discriminant_data(&a1()).unwrap();
    assert_eq!(d.dual_gram, vec![vec![rat(1, 2)]]);
    assert_eq!(d.representatives, vec![vec![int(0)], vec![rat(1, 2)]]);
    assert_eq!(discriminant_data(&RationalLattice::diagonal(&[2, 2]).unwrap()).unwrap().representatives.len(), 4);
    assert_eq!(discriminant_data(&RationalLattice::from_ints(&[&[2, 1], &[1, 2]]).unwrap()).unwrap().representatives.len(), 3);
    let odd = RationalLattice::from_ints(&[&[2, 1], &[1, 3]]).unwrap();
    assert!(matches!(discriminant_data(&odd), Err(Error::NotEvenIntegral(_))));
}

#[test]
fn discriminant_matches_dual_box_scan() {
    for g in [vec![vec![2, 1], vec![1, 4]], vec![vec![4, 2], vec![2, 6]], vec![vec![2, 0, 1], vec![0, 4, 1], vec![1, 1, 2]]] {
        let rows: Vec<&[i64]> = g.iter().map(|r| r.as_slice()).collect();
        let lat = RationalLattice::from_ints(&rows).unwrap();
        let d = g.len();
        let det = lat.determinant().to_integer().to_string().parse::<i64>().unwrap();
        let inv = lat.inverse_gram();
        let mut seen = BTreeSet::new();
        let mut y = vec![0i64; d];
        loop {
            let mu: Vec<Rational> =
                inv.iter().map(|r| frac(&r.iter().zip(&y).map(|(a, &b)| a * int(b)).sum::<Rational>())).collect();
            seen.insert(mu);
            let mut i = 0;
            while i < d {
                y[i] += 1;
                if y[i] < det {
                    break;
                }
                y[i] = 0;
                i += 1;
            }
            if i == d {
                break;
            }
        }
        let reps: BTreeSet<_> = discriminant_data(&lat).unwrap().representatives.into_iter().collect();
        assert_eq!(reps.len() as i64, det);
        assert_eq!(reps, seen);
    }
}

#[test]
fn shift_identity() {
    let lat = a1();
    let c = LatticeCoset::new(lat.clone(), vec![rat(1, 2)]).unwrap();
    let (u, v) = (vec![rat(1, 3)], vec![rat(1, 5)]);
    let base = theta_with_characteristics(&c, &u, &v, &int(8)).unwrap();
    for b in [1i64, -1, 2] {
        let beta = vec![int(b)];
        let moved = LatticeCoset::new(lat.clone(), vec![rat(1, 2) + int(b)]).unwrap();
        let u2 = vec![&u[0] - int(b)];
        let t = theta_with_characteristics(&moved, &u2, &v, &int(8)).unwrap();
        let phase = Cyclo::zeta_of(&(lat.pair(&v, &beta) / int(2)));
        assert!(t.sub(&base.scale_by(&phase)).is_zero(), "beta = {b}");
    }
}

#[test]
fn json_round_trip_and_errors() {
    let v = serde_json::json!({"gram": [["2", "1"], ["1", "2"]], "basis_names": ["a", "b"]});
    let lat = RationalLattice::from_json(&v).unwrap();
    assert_eq!(lat.to_json(), v);
    assert!(RationalLattice::from_json(&serde_json::json!({"gram": [["0.5"]]})).is_err());
    assert!(matches!(RationalLattice::from_ints(&[&[1, 2], &[2, 1]]), Err(Error::NotPositiveDefinite)));
}

fn gram2() -> impl Strategy<Value = RationalLattice> {
    (1i64..6, 1i64..6, -3i64..=3, 1i64..4).prop_filter_map("diagonally dominant", |(a, b, c, den)| {
        if 2 * a > c.abs() && 2 * b > c.abs() {
            let g = vec![vec![int(2 * a), rat(c, den)], vec![rat(c, den), int(2 * b)]];
            RationalLattice::new(g).ok()
        } else {
            None
        }
    })
}

fn small_vec() -> impl Strategy<Value = Vec<Rational>> {
    prop::collection::vec((-6i64..=6, 1i64..=6).prop_map(|(n, d)| rat(n, d)), 2)
}

proptest! {
    #[test]
    fn enumeration_is_complete(lat in gram2(), shift in small_vec(), u in small_vec(), b in 1i64..8) {
        let got = enumerate(&lat, &shift, &u, &int(b));
        prop_assert_eq!(got, box_oracle(&lat, &shift, &u, &int(b)));
    }

    #[test]
    fn untwisted_theta_counts_vectors(lat in gram2(), shift in small_vec()) {
        let c = LatticeCoset::new(lat.clone(), shift.clone()).unwrap();
        let z = vec![int(0), int(0)];
        let t = theta_with_characteristics(&c, &z, &z, &int(6)).unwrap();
        let mut total = 0i64;
        for (_, coef) in t.terms() {
            let r = coef.as_rational().unwrap();
            prop_assert!(r.is_integer() && r > int(0));
            total += r.to_integer().to_string().parse::<i64>().unwrap();
        }
        prop_assert_eq!(total as usize, enumerate(&lat, &shift, &z, &int(6)).len());
        let has_zero = c.shift.iter().all(|s| *s == int(0));
        prop_assert_eq!(t.coefficient(&int(0)) == Some(Cyclo::one()), has_zero);
    }
}
