//! Seeded Monte Carlo harness: kinematically plausible fixed-wing
//! trajectories, random ground-truth transforms, and campaign execution with
//! median aggregation per (σ, K, method) cell.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::{FrameTransform, Rotation3, Vec3};
use crate::measurement::{add_noise_set, synthesize_set, NoiseSpec};
use crate::pipeline::{estimate_ls_o, estimate_sdp_o, Method};
use crate::sdp::SolverOptions;

/// Kinematic envelope for generated trajectories. The paper reports only
/// that separations are consistent with UAV flight speeds and that turn and
/// climb rates are capped; the defaults here are a stated stand-in calibrated
/// to the reported ~1.38 km inter-agent distance scale.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TrajectoryConfig {
    /// m/s; one speed is drawn per trajectory from this closed range.
    pub speed_min: f64,
    pub speed_max: f64,
    /// Seconds between successive measurements.
    pub measurement_interval: f64,
    /// rad/s cap on heading change.
    pub max_turn_rate: f64,
    /// m/s cap on vertical speed.
    pub max_climb_rate: f64,
    /// Initial positions of A and B (global frame, metres).
    pub initial_a: Vec3,
    pub initial_b: Vec3,
    /// Longest trajectory any campaign cell will request.
    pub k_max: usize,
    pub seed: u64,
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        TrajectoryConfig {
            speed_min: 40.0,
            speed_max: 60.0,
            // The interval and climb cap together set how much vertical and
            // lateral excitation a K-point trajectory accumulates; these
            // values keep short trajectories well away from the planar
            // degeneracy while staying within UAV-plausible kinematics.
            measurement_interval: 15.0,
            max_turn_rate: 0.35,
            max_climb_rate: 25.0,
            initial_a: Vec3::new(0.0, 0.0, 300.0),
            initial_b: Vec3::new(800.0, 600.0, 350.0),
            k_max: 20,
            seed: 0,
        }
    }
}

impl TrajectoryConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.speed_min > 0.0 && self.speed_max >= self.speed_min) {
            return Err(Error::InvalidConfig(format!(
                "speed range [{}, {}] is empty or non-positive",
                self.speed_min, self.speed_max
            )));
        }
        if self.measurement_interval <= 0.0 {
            return Err(Error::InvalidConfig(
                "measurement interval must be positive".into(),
            ));
        }
        if self.max_turn_rate < 0.0 || self.max_climb_rate < 0.0 {
            return Err(Error::InvalidConfig("rate caps must be non-negative".into()));
        }
        if self.k_max == 0 {
            return Err(Error::InvalidConfig("k_max must be at least 1".into()));
        }
        Ok(())
    }
}

/// Generates a waypoint sequence from `start` as a kinematic random walk:
/// one cruise speed per trajectory, per-step heading increments within the
/// turn-rate cap, per-step vertical speed within the climb-rate cap.
/// Successive separations equal `speed · interval` exactly.
pub fn generate_trajectory(
    cfg: &TrajectoryConfig,
    start: &Vec3,
    k: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Vec3>> {
    cfg.validate()?;
    let dt = cfg.measurement_interval;
    let speed = if cfg.speed_max > cfg.speed_min {
        rng.gen_range(cfg.speed_min..=cfg.speed_max)
    } else {
        cfg.speed_min
    };
    let mut heading = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
    let mut points = Vec::with_capacity(k);
    let mut pos = *start;
    points.push(pos);
    for _ in 1..k {
        let climb_cap = cfg.max_climb_rate.min(0.8 * speed);
        let v_z = if climb_cap > 0.0 {
            rng.gen_range(-climb_cap..=climb_cap)
        } else {
            0.0
        };
        let v_h = (speed * speed - v_z * v_z).sqrt();
        let max_dh = cfg.max_turn_rate * dt;
        if max_dh > 0.0 {
            heading += rng.gen_range(-max_dh..=max_dh);
        }
        pos += Vec3::new(v_h * heading.cos() * dt, v_h * heading.sin() * dt, v_z * dt);
        points.push(pos);
    }
    Ok(points)
}

/// Random ground truth: Haar-uniform rotation, translation uniform in a box.
pub fn sample_truth(seed: u64) -> FrameTransform {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_truth_with_rng(&mut rng)
}

/// Half-width in metres of the translation sampling box.
pub const TRUTH_TRANSLATION_BOX: f64 = 500.0;

pub fn sample_truth_with_rng(rng: &mut ChaCha8Rng) -> FrameTransform {
    FrameTransform::new(
        Rotation3::sample_uniform(rng),
        Vec3::from_fn(|_, _| rng.gen_range(-TRUTH_TRANSLATION_BOX..TRUTH_TRANSLATION_BOX)),
    )
}

/// A campaign grid: noise levels × measurement counts × methods, with a
/// fixed number of Monte Carlo trials per cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CampaignSpec {
    /// Radians.
    pub sigmas: Vec<f64>,
    pub k_values: Vec<usize>,
    pub trials_per_cell: usize,
    pub methods: Vec<Method>,
    /// When set, every trial reuses this truth and these fixed trajectories
    /// (paper-style "same trajectory" comparison); noise still varies.
    pub fixed_scenario: Option<FixedScenario>,
    pub seed: u64,
}

/// A prescribed scenario reused across trials.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FixedScenario {
    pub truth: FrameTransform,
    pub a_global: Vec<Vec3>,
    pub b_ins: Vec<Vec3>,
}

impl CampaignSpec {
    pub fn validate(&self) -> Result<()> {
        if self.trials_per_cell == 0 {
            return Err(Error::InvalidConfig("trials_per_cell must be >= 1".into()));
        }
        if self.sigmas.iter().any(|s| *s < 0.0) {
            return Err(Error::InvalidConfig("sigmas must be >= 0".into()));
        }
        if self.sigmas.is_empty() || self.k_values.is_empty() || self.methods.is_empty() {
            return Err(Error::InvalidConfig(
                "sigmas, k_values and methods must be non-empty".into(),
            ));
        }
        Ok(())
    }
}

/// One completed (or failed) trial.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialRecord {
    pub sigma: f64,
    pub k: usize,
    pub method: Method,
    pub trial: usize,
    pub rotation_error: Option<f64>,
    pub position_error: Option<f64>,
    pub rank1_ratio: Option<f64>,
    /// "ok" or a short failure tag.
    pub status: String,
    /// Mean inter-agent distance for this trial's geometry (metres).
    pub mean_agent_distance: f64,
}

/// Aggregated cell: medians over completed trials only.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellSummary {
    pub sigma: f64,
    pub k: usize,
    pub method: Method,
    pub median_rotation_error: Option<f64>,
    pub median_position_error: Option<f64>,
    pub completed: usize,
    pub failed: usize,
    /// Set when more than half the trials in the cell failed.
    pub flagged: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CampaignResult {
    pub cells: Vec<CellSummary>,
    pub trials: Vec<TrialRecord>,
    /// Mean inter-agent distance over all completed trials (metres).
    pub mean_agent_distance: f64,
}

impl CampaignResult {
    pub fn cell(&self, sigma: f64, k: usize, method: Method) -> Option<&CellSummary> {
        self.cells
            .iter()
            .find(|c| c.sigma == sigma && c.k == k && c.method == method)
    }
}

/// Lower median: for even counts the lower of the two central order
/// statistics, so the aggregate is stable across implementations.
pub fn lower_median(values: &mut Vec<f64>) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Some(values[(values.len() - 1) / 2])
}

/// Deterministic per-trial seed derived from the campaign seed and the cell
/// coordinates, so any single trial is replayable in isolation.
pub fn trial_seed(campaign_seed: u64, sigma_index: usize, k_index: usize, trial: usize) -> u64 {
    // SplitMix64 over a unique cell/trial encoding.
    let mut z = campaign_seed
        ^ (sigma_index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (k_index as u64).wrapping_mul(0xBF58_476D_1CE4_E5B9)
        ^ (trial as u64).wrapping_mul(0x94D0_49BB_1331_11EB);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

struct TrialScenario {
    truth: FrameTransform,
    a_global: Vec<Vec3>,
    b_ins: Vec<Vec3>,
}

fn trial_scenario(
    spec: &CampaignSpec,
    cfg: &TrajectoryConfig,
    k: usize,
    rng: &mut ChaCha8Rng,
) -> Result<TrialScenario> {
    if let Some(fixed) = &spec.fixed_scenario {
        if fixed.a_global.len() < k {
            return Err(Error::InvalidConfig(format!(
                "fixed scenario has {} points, cell needs {k}",
                fixed.a_global.len()
            )));
        }
        return Ok(TrialScenario {
            truth: fixed.truth,
            a_global: fixed.a_global[..k].to_vec(),
            b_ins: fixed.b_ins[..k].to_vec(),
        });
    }
    let truth = sample_truth_with_rng(rng);
    let a_global = generate_trajectory(cfg, &cfg.initial_a, k, rng)?;
    let b_global = generate_trajectory(cfg, &cfg.initial_b, k, rng)?;
    let b_ins = b_global.iter().map(|p| truth.apply(p)).collect();
    Ok(TrialScenario {
        truth,
        a_global,
        b_ins,
    })
}

fn run_trial(
    spec: &CampaignSpec,
    cfg: &TrajectoryConfig,
    opts: &SolverOptions,
    sigma: f64,
    k: usize,
    method: Method,
    trial: usize,
    seed: u64,
) -> TrialRecord {
    let mut record = TrialRecord {
        sigma,
        k,
        method,
        trial,
        rotation_error: None,
        position_error: None,
        rank1_ratio: None,
        status: "ok".into(),
        mean_agent_distance: 0.0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scenario = match trial_scenario(spec, cfg, k, &mut rng) {
        Ok(s) => s,
        Err(e) => {
            record.status = status_tag(&e);
            return record;
        }
    };
    let inv = scenario.truth.inverse();
    record.mean_agent_distance = scenario
        .a_global
        .iter()
        .zip(&scenario.b_ins)
        .map(|(a, b)| (a - inv.apply(b)).norm())
        .sum::<f64>()
        / k as f64;

    let noiseless = match synthesize_set(&scenario.truth, &scenario.a_global, &scenario.b_ins) {
        Ok(ms) => ms,
        Err(e) => {
            record.status = status_tag(&e);
            return record;
        }
    };
    let noisy = add_noise_set(
        &noiseless,
        &NoiseSpec {
            sigma,
            seed: seed ^ 0xA5A5_A5A5,
        },
    );
    let estimate = match method {
        Method::SdpO => estimate_sdp_o(&noisy, opts, Some(&scenario.truth)),
        Method::LsO => estimate_ls_o(&noisy, opts, Some(&scenario.truth)),
        Method::SdpORefined => estimate_sdp_o(&noisy, opts, Some(&scenario.truth)).map(|r| {
            crate::pipeline::refine_mle(&noisy, &r, &Default::default(), Some(&scenario.truth))
        }),
    };
    match estimate {
        Ok(report) => {
            record.rotation_error = report.rotation_error;
            record.position_error = report.position_error;
            record.rank1_ratio = report.diagnostics.rank1_ratio;
        }
        Err(e) => record.status = status_tag(&e),
    }
    record
}

fn status_tag(e: &Error) -> String {
    match e {
        Error::NongenericTrajectory(_) => "nongeneric".into(),
        Error::SolverFailed { .. } => "solver_failed".into(),
        Error::DegenerateExtraction(_) => "degenerate_extraction".into(),
        Error::DegenerateDisplacement => "degenerate_displacement".into(),
        Error::InsufficientMeasurements { .. } => "insufficient".into(),
        Error::IllDefinedProjection => "ill_defined_projection".into(),
        Error::InvalidConfig(_) => "config".into(),
    }
}

/// Runs the full grid. Trials are executed in deterministic order with
/// deterministic per-trial seeds; individual failures are recorded, not
/// fatal.
pub fn run_campaign(
    spec: &CampaignSpec,
    cfg: &TrajectoryConfig,
    opts: &SolverOptions,
) -> Result<CampaignResult> {
    run_campaign_with(spec, cfg, opts, |_| {})
}

/// As [`run_campaign`], invoking `observer` after every completed trial so
/// callers can persist partial results as they arrive.
pub fn run_campaign_with(
    spec: &CampaignSpec,
    cfg: &TrajectoryConfig,
    opts: &SolverOptions,
    mut observer: impl FnMut(&TrialRecord),
) -> Result<CampaignResult> {
    spec.validate()?;
    cfg.validate()?;
    let mut trials = Vec::new();
    let mut cells = Vec::new();
    for (si, &sigma) in spec.sigmas.iter().enumerate() {
        for (ki, &k) in spec.k_values.iter().enumerate() {
            for &method in &spec.methods {
                let mut rot = Vec::new();
                let mut pos = Vec::new();
                let mut failed = 0usize;
                for trial in 0..spec.trials_per_cell {
                    let seed = trial_seed(spec.seed, si, ki, trial);
                    let record = run_trial(spec, cfg, opts, sigma, k, method, trial, seed);
                    if record.status == "ok" {
                        rot.extend(record.rotation_error);
                        pos.extend(record.position_error);
                    } else {
                        failed += 1;
                    }
                    observer(&record);
                    trials.push(record);
                }
                let completed = spec.trials_per_cell - failed;
                cells.push(CellSummary {
                    sigma,
                    k,
                    method,
                    median_rotation_error: lower_median(&mut rot),
                    median_position_error: lower_median(&mut pos),
                    completed,
                    failed,
                    flagged: failed * 2 > spec.trials_per_cell,
                });
            }
        }
    }
    let (dist_sum, dist_n) = trials
        .iter()
        .filter(|t| t.status == "ok")
        .fold((0.0, 0usize), |(s, n), t| (s + t.mean_agent_distance, n + 1));
    Ok(CampaignResult {
        cells,
        trials,
        mean_agent_distance: if dist_n > 0 {
            dist_sum / dist_n as f64
        } else {
            0.0
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_caps_give_straight_level_line() {
        let cfg = TrajectoryConfig {
            max_turn_rate: 0.0,
            max_climb_rate: 0.0,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pts = generate_trajectory(&cfg, &cfg.initial_a, 10, &mut rng).unwrap();
        let first = pts[1] - pts[0];
        for w in pts.windows(2) {
            let step = w[1] - w[0];
            assert!((step - first).norm() < 1e-9, "steps vary");
            assert!(step.z.abs() < 1e-12, "climb with zero cap");
        }
    }

    #[test]
    fn kinematic_caps_respected() {
        let cfg = TrajectoryConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let dt = cfg.measurement_interval;
        for _ in 0..1000 {
            let pts = generate_trajectory(&cfg, &cfg.initial_a, 8, &mut rng).unwrap();
            let mut prev_heading: Option<f64> = None;
            for w in pts.windows(2) {
                let step = w[1] - w[0];
                let speed = step.norm() / dt;
                assert!(
                    speed >= cfg.speed_min - 1e-9 && speed <= cfg.speed_max + 1e-9,
                    "speed {speed}"
                );
                assert!(step.z.abs() / dt <= cfg.max_climb_rate + 1e-9);
                let heading = step.y.atan2(step.x);
                if let Some(prev) = prev_heading {
                    let dh = crate::frames::wrap_angle(heading - prev).abs();
                    assert!(dh <= cfg.max_turn_rate * dt + 1e-9, "turn {dh}");
                }
                prev_heading = Some(heading);
            }
        }
    }

    #[test]
    fn zero_interval_is_config_error() {
        let cfg = TrajectoryConfig {
            measurement_interval: 0.0,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!(generate_trajectory(&cfg, &Vec3::zeros(), 5, &mut rng).is_err());
    }

    #[test]
    fn sample_truth_deterministic_and_valid() {
        let t1 = sample_truth(42);
        let t2 = sample_truth(42);
        assert_eq!(t1.rotation.matrix(), t2.rotation.matrix());
        assert_eq!(t1.translation, t2.translation);
        assert!(t1.rotation.orthogonality_defect() < 1e-9);
    }

    #[test]
    fn haar_mean_rotation_angle() {
        // E[angle] for Haar-uniform rotations is π/2 + 2/π ≈ 2.2074 rad.
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 10_000;
        let id = Rotation3::identity();
        let mean: f64 = (0..n)
            .map(|_| {
                crate::frames::geodesic_distance(&id, &sample_truth_with_rng(&mut rng).rotation)
            })
            .sum::<f64>()
            / n as f64;
        let expect = std::f64::consts::FRAC_PI_2 + 2.0 / std::f64::consts::PI;
        assert!(
            (mean - expect).abs() < 1.0_f64.to_radians(),
            "mean {mean} vs {expect}"
        );
    }

    #[test]
    fn lower_median_convention() {
        let mut v = vec![4.0, 1.0, 3.0, 2.0];
        assert_eq!(lower_median(&mut v), Some(2.0));
        let mut v = vec![5.0, 1.0, 3.0];
        assert_eq!(lower_median(&mut v), Some(3.0));
        assert_eq!(lower_median(&mut vec![]), None);
    }

    #[test]
    fn noiseless_campaign_is_exact() {
        let spec = CampaignSpec {
            sigmas: vec![0.0],
            k_values: vec![6, 8],
            trials_per_cell: 5,
            methods: vec![Method::SdpO],
            fixed_scenario: None,
            seed: 7,
        };
        let result = run_campaign(&spec, &TrajectoryConfig::default(), &Default::default()).unwrap();
        for cell in &result.cells {
            assert!(cell.completed > 0);
            assert!(
                cell.median_rotation_error.unwrap() < 1e-6,
                "cell ({}, {}) median {}",
                cell.sigma,
                cell.k,
                cell.median_rotation_error.unwrap()
            );
        }
    }

    #[test]
    fn campaign_is_seed_deterministic() {
        let spec = CampaignSpec {
            sigmas: vec![1.0_f64.to_radians()],
            k_values: vec![6],
            trials_per_cell: 3,
            methods: vec![Method::SdpO],
            fixed_scenario: None,
            seed: 11,
        };
        let cfg = TrajectoryConfig::default();
        let r1 = run_campaign(&spec, &cfg, &Default::default()).unwrap();
        let r2 = run_campaign(&spec, &cfg, &Default::default()).unwrap();
        for (a, b) in r1.trials.iter().zip(&r2.trials) {
            assert_eq!(a.rotation_error, b.rotation_error);
            assert_eq!(a.position_error, b.position_error);
            assert_eq!(a.status, b.status);
        }
    }

    #[test]
    fn planar_trajectory_cells_flag_nongeneric() {
        let cfg = TrajectoryConfig {
            max_climb_rate: 0.0,
            ..Default::default()
        };
        let spec = CampaignSpec {
            sigmas: vec![0.0],
            k_values: vec![8],
            trials_per_cell: 4,
            methods: vec![Method::LsO],
            fixed_scenario: None,
            seed: 13,
        };
        let result = run_campaign(&spec, &cfg, &Default::default()).unwrap();
        for t in &result.trials {
            assert_eq!(t.status, "nongeneric");
        }
        assert!(result.cells[0].flagged);
    }
}
