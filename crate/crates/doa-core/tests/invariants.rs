//! Cross-module invariants: metric axioms for the rotation distance, frame
//! round trips, and end-to-end noiseless recovery across random geometries.

use doa_core::frames::{
    angles_from_vector, geodesic_distance, wrap_angle, DoaAngles, FrameTransform, Rotation3, Vec3,
};
use doa_core::measurement::synthesize_set;
use doa_core::pipeline::{estimate_ls_o, estimate_sdp_o};
use doa_core::sdp::SolverOptions;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn geodesic_distance_metric_axioms() {
    let mut rng = ChaCha8Rng::seed_from_u64(901);
    for _ in 0..1000 {
        let r1 = Rotation3::sample_uniform(&mut rng);
        let r2 = Rotation3::sample_uniform(&mut rng);
        let r3 = Rotation3::sample_uniform(&mut rng);
        let d12 = geodesic_distance(&r1, &r2);
        let d21 = geodesic_distance(&r2, &r1);
        let d13 = geodesic_distance(&r1, &r3);
        let d23 = geodesic_distance(&r2, &r3);
        assert!(d12 >= 0.0);
        assert!((d12 - d21).abs() < 1e-12, "symmetry: {d12} vs {d21}");
        assert!(geodesic_distance(&r1, &r1) < 1e-7, "identity of indiscernibles");
        assert!(
            d13 <= d12 + d23 + 1e-9,
            "triangle inequality: {d13} > {d12} + {d23}"
        );
    }
}

#[test]
fn transform_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(902);
    for _ in 0..1000 {
        let t = FrameTransform::new(
            Rotation3::sample_uniform(&mut rng),
            Vec3::from_fn(|_, _| rng.gen_range(-500.0..500.0)),
        );
        let p = Vec3::from_fn(|_, _| rng.gen_range(-1000.0..1000.0));
        let back = t.inverse().apply(&t.apply(&p));
        assert!((back - p).norm() / p.norm().max(1.0) < 1e-9);
    }
}

proptest! {
    #[test]
    fn angle_vector_round_trip(
        azimuth in -std::f64::consts::PI..std::f64::consts::PI,
        elevation in -1.5..1.5f64,
    ) {
        let angles = DoaAngles { azimuth, elevation };
        let v = angles.unit_vector();
        let back = angles_from_vector(&v).unwrap();
        prop_assert!(wrap_angle(back.azimuth - azimuth).abs() < 1e-12);
        prop_assert!((back.elevation - elevation).abs() < 1e-12);
    }

    #[test]
    fn wrap_angle_lands_in_range(x in -1e6..1e6f64) {
        let w = wrap_angle(x);
        prop_assert!(w > -std::f64::consts::PI && w <= std::f64::consts::PI);
        // Wrapping preserves the angle modulo 2π.
        prop_assert!(((x - w) / (2.0 * std::f64::consts::PI)).rem_euclid(1.0) < 1e-6
            || ((x - w) / (2.0 * std::f64::consts::PI)).rem_euclid(1.0) > 1.0 - 1e-6);
    }
}

fn random_scenario(
    rng: &mut ChaCha8Rng,
    k: usize,
) -> (FrameTransform, doa_core::measurement::MeasurementSet) {
    let truth = FrameTransform::new(
        Rotation3::sample_uniform(rng),
        Vec3::from_fn(|_, _| rng.gen_range(-400.0..400.0)),
    );
    let a: Vec<Vec3> = (0..k)
        .map(|_| Vec3::from_fn(|_, _| rng.gen_range(-1000.0..1000.0)))
        .collect();
    let bg: Vec<Vec3> = (0..k)
        .map(|_| Vec3::from_fn(|_, _| rng.gen_range(-1000.0..1000.0)))
        .collect();
    let b_ins: Vec<Vec3> = bg.iter().map(|p| truth.apply(p)).collect();
    (truth.clone(), synthesize_set(&truth, &a, &b_ins).unwrap())
}

#[test]
fn noiseless_round_trip_many_geometries() {
    let mut rng = ChaCha8Rng::seed_from_u64(903);
    let opts = SolverOptions::default();
    for trial in 0..100 {
        let k = rng.gen_range(6..=12);
        let (truth, ms) = random_scenario(&mut rng, k);
        let report = estimate_sdp_o(&ms, &opts, Some(&truth)).unwrap();
        assert!(
            report.rotation_error.unwrap() < 1e-6,
            "trial {trial}: rotation error {}",
            report.rotation_error.unwrap()
        );
        assert!(
            report.position_error.unwrap() < 1e-3,
            "trial {trial}: position error {}",
            report.position_error.unwrap()
        );
    }
}

#[test]
fn ls_route_noiseless_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(904);
    let opts = SolverOptions::default();
    for trial in 0..100 {
        let k = rng.gen_range(6..=12);
        let (truth, ms) = random_scenario(&mut rng, k);
        let report = estimate_ls_o(&ms, &opts, Some(&truth)).unwrap();
        // The arccos-based metric itself bottoms out near √ε ≈ 1.5e-8.
        assert!(
            report.rotation_error.unwrap() < 1e-6,
            "trial {trial}: rotation error {}",
            report.rotation_error.unwrap()
        );
    }
}
