//! JSON experiment configuration. Keys carry explicit units (`sigma_deg`,
//! `speed_min_mps`, …); angles are degrees in configs and radians on the wire.

use std::path::Path;

use doa_core::pipeline::Method;
use doa_core::sdp::SolverOptions;
use doa_core::sim::{CampaignSpec, TrajectoryConfig};
use doa_core::Vec3;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub trajectory: TrajectorySection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub simulate: SimulateSection,
    #[serde(default)]
    pub campaign: Option<CampaignSection>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectorySection {
    pub speed_min_mps: Option<f64>,
    pub speed_max_mps: Option<f64>,
    pub measurement_interval_s: Option<f64>,
    pub max_turn_rate_rad_per_s: Option<f64>,
    pub max_climb_rate_mps: Option<f64>,
    pub initial_a_m: Option<[f64; 3]>,
    pub initial_b_m: Option<[f64; 3]>,
    pub k_max: Option<usize>,
    pub seed: Option<u64>,
}

impl TrajectorySection {
    pub fn to_core(&self) -> TrajectoryConfig {
        let d = TrajectoryConfig::default();
        TrajectoryConfig {
            speed_min: self.speed_min_mps.unwrap_or(d.speed_min),
            speed_max: self.speed_max_mps.unwrap_or(d.speed_max),
            measurement_interval: self.measurement_interval_s.unwrap_or(d.measurement_interval),
            max_turn_rate: self.max_turn_rate_rad_per_s.unwrap_or(d.max_turn_rate),
            max_climb_rate: self.max_climb_rate_mps.unwrap_or(d.max_climb_rate),
            initial_a: self
                .initial_a_m
                .map(|p| Vec3::new(p[0], p[1], p[2]))
                .unwrap_or(d.initial_a),
            initial_b: self
                .initial_b_m
                .map(|p| Vec3::new(p[0], p[1], p[2]))
                .unwrap_or(d.initial_b),
            k_max: self.k_max.unwrap_or(d.k_max),
            seed: self.seed.unwrap_or(d.seed),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub feasibility_tol: Option<f64>,
    pub gap_tol: Option<f64>,
    pub accept_tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub rank1_ratio_threshold: Option<f64>,
    pub translation_scale_override: Option<f64>,
}

impl SolverSection {
    pub fn to_core(&self) -> SolverOptions {
        let d = SolverOptions::default();
        SolverOptions {
            feasibility_tol: self.feasibility_tol.unwrap_or(d.feasibility_tol),
            gap_tol: self.gap_tol.unwrap_or(d.gap_tol),
            accept_tol: self.accept_tol.unwrap_or(d.accept_tol),
            max_iter: self.max_iter.unwrap_or(d.max_iter),
            rank1_ratio_threshold: self
                .rank1_ratio_threshold
                .unwrap_or(d.rank1_ratio_threshold),
            scale_override: self.translation_scale_override,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    pub k: Option<usize>,
    pub sigma_deg: Option<f64>,
    pub seed: Option<u64>,
}

impl Default for SimulateSection {
    fn default() -> Self {
        SimulateSection {
            k: None,
            sigma_deg: None,
            seed: None,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignSection {
    pub sigma_deg: Vec<f64>,
    pub k_values: Vec<usize>,
    pub trials_per_cell: usize,
    pub methods: Vec<Method>,
    pub seed: Option<u64>,
    /// Reuse the Table-1-style fixture trajectory for every trial instead of
    /// sampling fresh geometry (methods comparison on a fixed scenario).
    #[serde(default)]
    pub fixed_scenario_file: Option<String>,
}

impl CampaignSection {
    pub fn to_core(
        &self,
        seed_override: Option<u64>,
        fixed: Option<doa_core::sim::FixedScenario>,
    ) -> CampaignSpec {
        CampaignSpec {
            sigmas: self.sigma_deg.iter().map(|s| s.to_radians()).collect(),
            k_values: self.k_values.clone(),
            trials_per_cell: self.trials_per_cell,
            methods: self.methods.clone(),
            fixed_scenario: fixed,
            seed: seed_override.or(self.seed).unwrap_or(0),
        }
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("invalid config {}: {e}", path.display())))
}
