use num_complex::Complex64;
use voatheta::block::*;
use voatheta::coset::*;
use voatheta::lattice::RationalLattice;
use voatheta::qseries::QSeries;
use voatheta::rational::{int, rat};
use voatheta::{Cyclo, Error};

fn a1() -> RationalLattice {
    RationalLattice::from_ints(&[&[2]]).unwrap()
}

fn vac_task(lat: RationalLattice, shift: Vec<voatheta::Rational>, order: i64) -> ThetaTask {
    let d = lat.rank();
    ThetaTask::new(ModuleSpec::new(lat, shift).unwrap(), Insertion::Vacuum, vec![int(0); d], vec![int(0); d], int(order)).unwrap()
}

#[test]
fn x_trace_of_vacuum_is_theta() {
    let x = x_trace(&vac_task(a1(), vec![int(0)], 10)).unwrap();
    let want = QSeries::from_integers(&[1, 2, 0, 0, 2, 0, 0, 0, 0, 2], int(0), 1, int(10)).unwrap();
    assert!(x.sub(&want).is_zero());
}

#[test]
fn x_trace_times_eta_inverse_is_z() {
    let lat = RationalLattice::from_ints(&[&[2, 1], &[1, 2]]).unwrap();
    let t = ThetaTask::new(
        ModuleSpec::new(lat, vec![rat(1, 3), rat(1, 3)]).unwrap(),
        Insertion::Cartan(vec![int(1), int(0)]),
        vec![rat(1, 4), int(0)],
        vec![int(0), rat(1, 2)],
        int(6),
    )
    .unwrap();
    let x = x_trace(&t).unwrap();
    let z = z_theta(&t).unwrap();
    let back = x.mul(&voatheta::modforms::eta_power(-2, &int(8)).unwrap());
    let common = back.trunc().clone().min(z.trunc().clone());
    assert!(back.truncate(&common).sub(&z.truncate(&common)).is_zero());
}

#[test]
fn final_laws_on_the_dual_frame() {
    let frame = CosetFrame::dual_frame(&a1()).unwrap();
    let order = int(150);
    let st = frame_st(&frame, &order).unwrap();
    for class in 0..st.classes.len() {
        assert!(verify_final_t_exact(&frame, &st, class, &Insertion::Vacuum, &[int(0)], &[int(0)], &int(20)).unwrap());
        for tau in [Complex64::new(0.0, 1.0), Complex64::new(0.0, 2.0)] {
            let r = verify_final_theorem(&frame, &st, class, &Insertion::Vacuum, &[int(0)], &[int(0)], FinalLaw::S, tau, &order, 1e-6).unwrap();
            assert!(r.pass, "class {class} at {tau}: {}", r.residual);
        }
    }
}

#[test]
fn trivial_frame_has_unit_multiplicity() {
    let k = RationalLattice::diagonal(&[2, 4]).unwrap();
    let id = vec![vec![int(1), int(0)], vec![int(0), int(1)]];
    let frame = CosetFrame::new(k.clone(), k, id, vec![vec![int(0), int(0)]]).unwrap();
    let dec = theta_decompose(&frame, 0, &int(12)).unwrap();
    assert_eq!(dec.classes.len(), 1);
    assert!(dec.reassembly_exact);
    assert!(dec.classes[0].ch.sub(&QSeries::one(dec.classes[0].ch.trunc().clone())).is_zero());
    let probe = s_closure_probe(&frame, &int(12)).unwrap();
    assert!(probe.residual < 1e-9, "{}", probe.note);
}

#[test]
fn dual_frame_classes_have_unit_multiplicity() {
    let k = RationalLattice::from_ints(&[&[2, 1], &[1, 2]]).unwrap();
    let frame = CosetFrame::dual_frame(&k).unwrap();
    let dec = theta_decompose(&frame, 0, &int(12)).unwrap();
    assert_eq!(dec.classes.len(), 3);
    assert!(dec.reassembly_exact);
    for c in &dec.classes {
        assert!(c.ch.sub(&QSeries::one(c.ch.trunc().clone())).is_zero(), "{:?}", c.mu);
        assert!(k_class_index(&frame, &c.mu).is_ok());
    }
}

#[test]
fn invalid_frames() {
    let k = a1();
    // K = 2Z inside L = Z with <e,e> = 1/2 is fine; the embedding 2 pulls back 2.
    let l = RationalLattice::new(vec![vec![rat(1, 2)]]).unwrap();
    assert!(CosetFrame::new(l.clone(), k.clone(), vec![vec![int(2)]], vec![vec![int(0)]]).is_ok());
    let bad_gram = CosetFrame::new(l.clone(), k.clone(), vec![vec![int(1)]], vec![vec![int(0)]]);
    assert!(matches!(bad_gram, Err(Error::InvalidFrame(_))));
    let bad_shift = CosetFrame::new(l.clone(), k.clone(), vec![vec![int(2)]], vec![vec![rat(1, 3)]]);
    assert!(matches!(bad_shift, Err(Error::InvalidFrame(_))));
    let not_dual = RationalLattice::new(vec![vec![rat(1, 8)]]).unwrap();
    assert!(matches!(CosetFrame::new(not_dual, RationalLattice::from_ints(&[&[2]]).unwrap(), vec![vec![int(4)]], vec![]), Err(Error::InvalidFrame(_))));
    let rank = CosetFrame::new(RationalLattice::diagonal(&[2, 2]).unwrap(), k, vec![vec![int(1)]], vec![]);
    assert!(matches!(rank, Err(Error::InvalidFrame(_))));
}

#[test]
fn frame_json() {
    let j = serde_json::json!({"L": {"gram": [["1/2"]]}, "K": {"gram": [["2"]]}, "embedding": [["2"]], "shifts": [["0"], ["1"]]});
    let f = CosetFrame::from_json(&j).unwrap();
    assert_eq!(f.shifts.len(), 2);
    assert_eq!(f.to_k(&[int(1)]), vec![rat(1, 2)]);
    assert!(CosetFrame::from_json(&serde_json::json!({"L": {"gram": [["1/2"]]}, "K": {"gram": [["2"]]}})).is_err());
}

#[test]
fn charged_insertions_have_zero_trace() {
    let m = ModuleSpec::new(RationalLattice::diagonal(&[2, 2]).unwrap(), vec![rat(1, 2), int(0)]).unwrap();
    let v = vanishing_check(&m, &[int(1), int(-1)], &int(5)).unwrap();
    assert!(v.vanishes && v.kets > 0);
    let neutral = vanishing_check(&m, &[int(0), int(0)], &int(5)).unwrap();
    assert!(!neutral.vanishes);
    assert_eq!(neutral.trace.coefficient(&(rat(1, 4) - rat(2, 24))), Some(Cyclo::from_int(2)));
}
