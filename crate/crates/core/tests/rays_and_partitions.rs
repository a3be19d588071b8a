use std::collections::BTreeSet;

use cremer_core::angle::periodic_angles;
use cremer_core::potential::{green, DEFAULT_BUDGET};
use cremer_core::ray::{land, ray_functional_check, trace_angle_set, trace_ray, PotentialGrid, RayStatus};
use cremer_core::separation::{build_fixed_collection, build_partition, preimage_collection, Location};
use cremer_core::{Angle, Complex64, Polynomial};
use proptest::prelude::*;

fn basilica() -> Polynomial {
    Polynomial::quadratic(Complex64::new(-1.0, 0.0))
}

prop_compose! {
    fn periodic_angle(max_period: u32)(n in 1..=max_period)(k in 0..(1u64 << n) - 1, n in Just(n)) -> Angle {
        Angle::new(k, (1u64 << n) - 1).unwrap()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn samples_lie_on_their_level_sets(t in periodic_angle(6)) {
        let p = basilica();
        let rays = trace_ray(&p, t, p.escape_radius().ln() + 1.0, 1e-6, 24).unwrap();
        for ray in &rays {
            prop_assert!(ray.samples.windows(2).all(|w| w[1].0 < w[0].0));
            for &(r, z) in ray.samples.iter().step_by(7) {
                let g = green(&p, z, DEFAULT_BUDGET).value();
                prop_assert!((g - r).abs() < 1e-6 * r.max(1e-3), "G = {g} at level {r}");
            }
        }
    }

    #[test]
    fn periodic_rays_land_on_repelling_cycles(t in periodic_angle(5)) {
        let p = basilica();
        match land(&p, t).unwrap() {
            RayStatus::Landed { point, multiplier: Some(m), .. } => {
                prop_assert!(m.norm() > 1.0);
                let period = cremer_core::angle::orbit(t, 2).period as u32;
                prop_assert!((p.iterate(point, period).point().unwrap() - point).norm() < 1e-6);
            }
            other => prop_assert!(false, "ray {t}: {other:?}"),
        }
    }
}

#[test]
fn image_rays_match_under_the_map() {
    let p = Polynomial::quadratic(Complex64::new(0.0, 1.0));
    let t: Angle = "1/7".parse().unwrap();
    let rays = trace_ray(&p, t, p.escape_radius().ln() + 1.0, 1e-6, 24).unwrap();
    assert_eq!(rays.len(), 3);
    assert!(ray_functional_check(&p, &rays, t).unwrap() < 1e-8);
}

#[test]
fn angle_sets_share_one_grid() {
    let p = basilica();
    let angles: BTreeSet<Angle> = periodic_angles(2, 3).unwrap().into_iter().collect();
    let grid = PotentialGrid::standard(&p);
    let rays = trace_angle_set(&p, &angles, &grid).unwrap();
    assert_eq!(rays.len(), angles.len());
    let lens: BTreeSet<usize> = rays.values().filter(|r| r.status.landing_point().is_some()).map(|r| r.samples.len()).collect();
    assert_eq!(lens.len(), 1, "landed rays reach the same level");
}

#[test]
fn reference_points_locate_to_their_cells() {
    let p = basilica();
    let base = build_fixed_collection(&p, 2).unwrap();
    for k in 0..=2 {
        let collection = if k == 0 { base.clone() } else { preimage_collection(&p, &base, k).unwrap() };
        assert!(collection.is_forward_invariant() || k > 0);
        let partition = build_partition(&p, &collection).unwrap();
        assert!(partition.euler_holds());
        for cell in &partition.cells {
            assert_eq!(partition.locate(cell.reference_point), Location::Cell(cell.id), "level {k}");
        }
    }
}

#[test]
fn preimage_levels_refine() {
    let p = basilica();
    let base = build_fixed_collection(&p, 2).unwrap();
    let mut previous = 0;
    for k in 0..=2 {
        let collection = if k == 0 { base.clone() } else { preimage_collection(&p, &base, k).unwrap() };
        assert_eq!(collection.rays.len(), 3 << k);
        assert!(collection.angles().is_superset(&base.angles()));
        let cells = build_partition(&p, &collection).unwrap().cell_count();
        assert!(cells >= previous);
        previous = cells;
    }
}

#[test]
fn every_basilica_ray_up_to_period_six_lands() {
    let p = basilica();
    let angles: BTreeSet<Angle> = cremer_core::angle::periodic_angles_up_to(2, 6).unwrap().into_iter().collect();
    let rays = trace_angle_set(&p, &angles, &PotentialGrid::standard(&p)).unwrap();
    let unlanded: Vec<String> = rays.values().filter(|r| r.status.landing_point().is_none()).map(|r| r.angle.to_string()).collect();
    assert!(unlanded.is_empty(), "{unlanded:?}");
}
