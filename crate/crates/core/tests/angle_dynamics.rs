use std::collections::BTreeSet;

use cremer_core::angle::{is_cyclic_order_preserving, orbit, periodic_angles, periodic_angles_up_to};
use cremer_core::Angle;
use proptest::prelude::*;

fn add(a: Angle, b: Angle) -> Angle {
    let q = a.denominator() as u128 * b.denominator() as u128;
    let p = (a.numerator() as u128 * b.denominator() as u128 + b.numerator() as u128 * a.denominator() as u128) % q;
    Angle::new(p as u64, q as u64).unwrap()
}

#[test]
fn periodic_angle_counts_are_exact() {
    for d in [2u64, 3, 4] {
        let mut n = 1;
        while d.pow(n) - 1 <= 1 << 20 {
            let angles = periodic_angles(d, n).unwrap();
            assert_eq!(angles.len() as u64, d.pow(n) - 1, "d = {d}, n = {n}");
            let distinct: BTreeSet<Angle> = angles.iter().copied().collect();
            assert_eq!(distinct.len(), angles.len());
            n += 1;
        }
        assert!(periodic_angles(d, n).is_err());
    }
}

#[test]
fn periodic_angles_are_periodic() {
    for t in periodic_angles(3, 4).unwrap() {
        let mut s = t;
        for _ in 0..4 {
            s = s.mul_d(3);
        }
        assert_eq!(s, t);
    }
    let up_to: BTreeSet<Angle> = periodic_angles_up_to(2, 4).unwrap().into_iter().collect();
    let top: BTreeSet<Angle> = periodic_angles(2, 4).unwrap().into_iter().collect();
    // Periods 1 and 2 divide 4; period 3 angles are extra.
    assert_eq!(up_to.len(), top.len() + periodic_angles(2, 3).unwrap().len() - 1);
}

#[test]
fn basilica_orbit() {
    let o = orbit(Angle::new(1, 3).unwrap(), 2);
    assert_eq!(o.period, 2);
    assert!(o.is_periodic());
    let pre = orbit(Angle::new(1, 6).unwrap(), 2);
    assert_eq!((pre.preperiod, pre.period), (1, 2));
}

prop_compose! {
    fn angle()(q in 1u64..10_000)(p in 0..q, q in Just(q)) -> Angle {
        Angle::new(p, q).unwrap()
    }
}

proptest! {
    #[test]
    fn preimages_round_trip(t in angle(), d in 2u64..5) {
        let pre = t.preimages(d).unwrap();
        prop_assert_eq!(pre.len() as u64, d);
        for s in &pre {
            prop_assert_eq!(s.mul_d(d), t);
        }
        let image = t.mul_d(d);
        prop_assert!(image.preimages(d).unwrap().contains(&t));
    }

    #[test]
    fn display_parse_round_trip(t in angle()) {
        prop_assert_eq!(t.to_string().parse::<Angle>().unwrap(), t);
    }

    #[test]
    fn cyclic_order_is_rotation_invariant(
        sources in proptest::collection::btree_set(angle(), 1..12),
        shift_src in angle(),
        shift_dst in angle(),
        d in 2u64..4,
    ) {
        let pairs: Vec<(Angle, Angle)> = sources.iter().map(|&t| (t, t.mul_d(d))).collect();
        let rotated: Vec<(Angle, Angle)> = pairs.iter().map(|&(a, b)| (add(a, shift_src), add(b, shift_dst))).collect();
        prop_assert_eq!(is_cyclic_order_preserving(&pairs).unwrap(), is_cyclic_order_preserving(&rotated).unwrap());
    }
}
