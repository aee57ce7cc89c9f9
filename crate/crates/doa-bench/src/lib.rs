//! Shared scenario builders for the pipeline benchmarks.

use doa_core::frames::FrameTransform;
use doa_core::measurement::{add_noise_set, synthesize_set, MeasurementSet, NoiseSpec};
use doa_core::sim::{generate_trajectory, sample_truth_with_rng, TrajectoryConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A seeded generic scenario on kinematically plausible trajectories.
pub fn scenario(seed: u64, k: usize) -> (FrameTransform, MeasurementSet) {
    let cfg = TrajectoryConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let truth = sample_truth_with_rng(&mut rng);
    let a = generate_trajectory(&cfg, &cfg.initial_a, k, &mut rng).expect("trajectory A");
    let b_global = generate_trajectory(&cfg, &cfg.initial_b, k, &mut rng).expect("trajectory B");
    let b_ins: Vec<_> = b_global.iter().map(|p| truth.apply(p)).collect();
    (truth, synthesize_set(&truth, &a, &b_ins).expect("synthesis"))
}

/// As [`scenario`] but with Gaussian angle noise of `sigma_deg` degrees.
pub fn noisy_scenario(seed: u64, k: usize, sigma_deg: f64) -> (FrameTransform, MeasurementSet) {
    let (truth, ms) = scenario(seed, k);
    let spec = NoiseSpec::new(sigma_deg.to_radians(), seed ^ 0xA5A5_A5A5).expect("noise spec");
    (truth, add_noise_set(&ms, &spec))
}
