mod common;

use lcs2d::controlset::periodic_orbit;
use lcs2d::geometry::{build_region_c, Membership};
use lcs2d::planar::Vec2;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::*;

#[test]
fn orbit_samples_are_boundary_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for k in 0..20 {
        let sys = random_system(&mut rng, if k % 2 == 0 { -1.0 } else { 1.0 });
        let region = build_region_c(&sys).unwrap();
        let orbit = periodic_orbit(&sys, 64).unwrap();
        for p in orbit.closed_polyline() {
            let verdict = region.contains(&p);
            assert_eq!(verdict.membership, Membership::Boundary, "margin {}", verdict.margin);
        }
    }
}

#[test]
fn equilibrium_segment_is_interior() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for _ in 0..20 {
        let sys = random_system(&mut rng, -1.0);
        let region = build_region_c(&sys).unwrap();
        for k in 0..=10 {
            let u = sys.lower() + (sys.upper() - sys.lower()) * k as f64 / 10.0;
            assert_eq!(region.contains(&sys.equilibrium(u)).membership, Membership::Interior);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn scaling_outward_from_an_interior_point_crosses_once(angle in 0.0..std::f64::consts::TAU) {
        // Convexity: along a ray from the origin (interior for S₀) the margin
        // changes sign exactly once.
        let region = build_region_c(&s0()).unwrap();
        let dir = Vec2::new(angle.cos(), angle.sin());
        let mut sign_changes = 0;
        let mut prev = region.margin(&Vec2::zeros()) > 0.0;
        for k in 1..200 {
            let inside = region.margin(&(dir * (k as f64 * 0.01))) > 0.0;
            sign_changes += usize::from(inside != prev);
            prev = inside;
        }
        prop_assert_eq!(sign_changes, 1);
    }

    #[test]
    fn distance_is_zero_exactly_when_not_exterior(x in -2.0..2.0f64, y in -2.0..2.0f64) {
        let region = build_region_c(&s0()).unwrap();
        let v = Vec2::new(x, y);
        let d = region.distance(&v);
        prop_assert_eq!(d == 0.0, !region.contains(&v).is_exterior());
        prop_assert!(d >= 0.0);
    }
}
