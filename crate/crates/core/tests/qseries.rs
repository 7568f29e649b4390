use num_complex::Complex64;
use proptest::prelude::*;
use voatheta::cyclo::Angle;
use voatheta::qseries::{GrowthBudget, QSeries};
use voatheta::rational::{int, rat};
use voatheta::{Cyclo, Error};

fn same(a: &QSeries, b: &QSeries) -> bool {
    a.trunc() == b.trunc() && a.sub(b).is_zero()
}

fn cyclo() -> impl Strategy<Value = Cyclo> {
    prop::collection::vec((-4i64..=4, 0i64..12), 1..4).prop_map(|ts| {
        ts.into_iter().fold(Cyclo::zero(), |acc, (c, a)| &acc + &Cyclo::term(int(c), Angle::new(a, 12)))
    })
}

/// Series in `q^{1/2}` with cyclotomic coefficients, known to `O(q^4)`.
fn series() -> impl Strategy<Value = QSeries> {
    (prop::collection::vec(cyclo(), 1..8), -2i64..2).prop_map(|(cs, start)| {
        let terms = cs.into_iter().enumerate().map(|(i, c)| (rat(start + i as i64, 2), c)).collect();
        QSeries::from_terms(terms, int(4)).unwrap()
    })
}

/// Series with leading coefficient 1.
fn unit_series() -> impl Strategy<Value = QSeries> {
    series().prop_map(|s| s.add(&QSeries::monomial(Cyclo::one(), rat(-3, 2), int(4))))
}

proptest! {
    #[test]
    fn cyclo_ring_laws(a in cyclo(), b in cyclo(), c in cyclo()) {
        prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
        prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
        prop_assert_eq!(&a * &b, &b * &a);
        prop_assert!((&(&(&a - &b) + &b) - &a).is_zero());
    }

    #[test]
    fn cyclo_embedding_is_multiplicative(a in cyclo(), b in cyclo()) {
        let lhs = (&a * &b).to_complex();
        let rhs = a.to_complex() * b.to_complex();
        prop_assert!((lhs - rhs).norm() < 1e-9 * (1.0 + rhs.norm()));
        prop_assert!((a.conj().to_complex() - a.to_complex().conj()).norm() < 1e-9);
    }

    #[test]
    fn series_ring_laws(a in series(), b in series(), c in series()) {
        prop_assert!(same(&a.mul(&b), &b.mul(&a)));
        prop_assert!(same(&a.mul(&b).mul(&c), &a.mul(&b.mul(&c))));
        let l = a.mul(&b.add(&c));
        let r = a.mul(&b).add(&a.mul(&c));
        prop_assert!(l.sub(&r).truncate(&l.trunc().clone().min(r.trunc().clone())).is_zero());
    }

    #[test]
    fn series_inverse(a in unit_series()) {
        let inv = a.invert().unwrap();
        let prod = a.mul(&inv);
        prop_assert!(same(&prod, &QSeries::one(prod.trunc().clone())));
    }

    #[test]
    fn derivative_is_a_derivation(a in series(), b in series()) {
        let l = a.mul(&b).q_derivative();
        let r = a.q_derivative().mul(&b).add(&a.mul(&b.q_derivative()));
        prop_assert!(l.sub(&r).is_zero());
    }

    #[test]
    fn json_round_trip(a in series()) {
        let back = QSeries::from_json(&a.to_json()).unwrap();
        prop_assert_eq!(back, a);
    }

    #[test]
    fn translate_matches_evaluation(a in series()) {
        let tau = Complex64::new(0.2, 0.9);
        let b = GrowthBudget::new(20.0, 1.0);
        let l = a.translate_tau().evaluate(tau, &b).unwrap().value;
        let r = a.evaluate(tau + 1.0, &b).unwrap().value;
        prop_assert!((l - r).norm() < 1e-9);
    }
}

#[test]
fn geometric_series_inverse() {
    let one_minus_q = QSeries::from_integers(&[1, -1], int(0), 1, int(6)).unwrap();
    let inv = one_minus_q.invert().unwrap();
    let expect = QSeries::from_integers(&[1, 1, 1, 1, 1, 1], int(0), 1, int(6)).unwrap();
    assert_eq!(inv, expect);
}

#[test]
fn truncation_propagates_through_products() {
    let a = QSeries::from_integers(&[1, 2], rat(1, 3), 3, int(2)).unwrap();
    let b = QSeries::from_integers(&[1], int(-1), 1, int(5)).unwrap();
    assert_eq!(a.mul(&b).trunc(), &int(1));
}

#[test]
fn zero_leading_term_is_rejected() {
    let z = QSeries::zero(int(3));
    assert!(matches!(z.invert(), Err(Error::NonInvertibleLeadingTerm(_))));
    let two = QSeries::from_integers(&[2, 1], int(0), 1, int(3)).unwrap();
    let inv = two.invert().unwrap();
    assert_eq!(inv.coefficient(&int(0)), Some(Cyclo::from_rational(rat(1, 2))));
}

#[test]
fn denominator_cap_is_enforced() {
    let r = QSeries::from_terms(vec![(rat(1, 2_000_003), Cyclo::one())], int(1));
    assert!(matches!(r, Err(Error::DenominatorCapExceeded(..))));
}

#[test]
fn tail_bound_is_geometric() {
    let s = QSeries::from_integers(&[1], int(0), 1, int(3)).unwrap();
    let tau = Complex64::new(0.0, 1.0);
    let ev = s.evaluate(tau, &GrowthBudget::new(1.0, 1.0)).unwrap();
    let x = (-2.0 * std::f64::consts::PI).exp();
    assert!((ev.tail_bound - x.powi(3) / (1.0 - x)).abs() < 1e-18);
    assert!(s.evaluate(Complex64::new(0.0, -1.0), &GrowthBudget::new(1.0, 1.0)).is_err());
}
