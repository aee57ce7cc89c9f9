//! Command implementations for the `doa` binary: single-shot estimation,
//! scenario simulation, Monte Carlo campaigns, and a constraint-residual
//! debugging dump.

pub mod config;
pub mod io;

use std::fmt;
use std::path::{Path, PathBuf};

use doa_core::error::Error as CoreError;
use doa_core::frames::FrameTransform;
use doa_core::linear_system::UnknownVector;
use doa_core::measurement::{perturb, synthesize_set, MeasurementSet};
use doa_core::pipeline::{estimate_ls_o, estimate_sdp_o, refine_mle, Method, RefineOptions};
use doa_core::sdp::{build_constraints, evaluate_constraints_direct, lift};
use doa_core::sim::{generate_trajectory, run_campaign_with, sample_truth, CampaignResult};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use config::ExperimentConfig;
use io::{EstimateFile, OutputFormat, TrialCsvWriter, TruthRecord};

/// CLI-level error with a stable exit code per failure class:
/// 2 parse, 3 nongeneric/insufficient data, 4 solver, 5 config, 1 otherwise.
#[derive(Debug)]
pub enum CliError {
    Parse(String),
    Nongeneric(String),
    Solver(String),
    Config(String),
    Io(std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Parse(_) => 2,
            CliError::Nongeneric(_) => 3,
            CliError::Solver(_) => 4,
            CliError::Config(_) => 5,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Parse(m) => write!(f, "parse error: {m}"),
            CliError::Nongeneric(m) => write!(f, "data error: {m}"),
            CliError::Solver(m) => write!(f, "solver error: {m}"),
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        match e.kind() {
            csv::ErrorKind::Io(_) => CliError::Io(std::io::Error::other(e)),
            _ => CliError::Parse(e.to_string()),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Parse(e.to_string())
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match &e {
            CoreError::NongenericTrajectory(_) | CoreError::InsufficientMeasurements { .. } => {
                CliError::Nongeneric(e.to_string())
            }
            CoreError::InvalidConfig(_) => CliError::Config(e.to_string()),
            _ => CliError::Solver(e.to_string()),
        }
    }
}

fn ensure_out_dir(out_dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(out_dir)?;
    Ok(())
}

fn load_optional_config(path: Option<&PathBuf>) -> Result<ExperimentConfig, CliError> {
    match path {
        Some(p) => config::load_config(p),
        None => Ok(ExperimentConfig::default()),
    }
}

/// `solve`: read a measurement CSV, run the chosen estimator, write
/// `estimate.json`, and print a one-line summary (plus a truth-discrepancy
/// report when a truth file is supplied).
pub fn cmd_solve(
    input: &Path,
    method: Method,
    config_path: Option<&PathBuf>,
    truth_path: Option<&PathBuf>,
    out_dir: &Path,
) -> Result<(), CliError> {
    let cfg = load_optional_config(config_path)?;
    let opts = cfg.solver.to_core();
    let ms = io::read_measurements(input)?;
    let truth: Option<TruthRecord> = truth_path.map(|p| io::read_json(p)).transpose()?;
    let truth_transform = truth.as_ref().map(|t| t.transform);

    let report = match method {
        Method::SdpO => estimate_sdp_o(&ms, &opts, truth_transform.as_ref())?,
        Method::LsO => estimate_ls_o(&ms, &opts, truth_transform.as_ref())?,
        Method::SdpORefined => {
            let initial = estimate_sdp_o(&ms, &opts, truth_transform.as_ref())?;
            refine_mle(&ms, &initial, &RefineOptions::default(), truth_transform.as_ref())
        }
    };

    ensure_out_dir(out_dir)?;
    let out_path = out_dir.join("estimate.json");
    io::write_json(
        &out_path,
        &EstimateFile {
            input: input.display().to_string(),
            report: report.clone(),
        },
    )?;

    println!(
        "{}: K={} objective={:.6e} rank1_ratio={} -> {}",
        method,
        ms.len(),
        report.diagnostics.objective,
        report
            .diagnostics
            .rank1_ratio
            .map(|r| format!("{r:.3e}"))
            .unwrap_or_else(|| "n/a".into()),
        out_path.display()
    );
    println!("R_bar = {:?}", report.r_bar.matrix().as_slice());
    println!(
        "T_bar = [{:.6}, {:.6}, {:.6}] m",
        report.t_bar.x, report.t_bar.y, report.t_bar.z
    );
    if let Some(t) = &truth_transform {
        // Discrepancy report against the supplied reference transform.
        let dr = doa_core::frames::geodesic_distance(&report.r_bar, &t.rotation);
        let dt = (report.t_bar - t.translation).norm();
        println!("discrepancy vs reference: rotation {dr:.6e} rad, translation {dt:.6e} m");
    }
    if let Some(w) = &report.warning {
        eprintln!("warning: {w}");
    }
    Ok(())
}

/// `simulate`: generate a seeded scenario, write `measurements.csv` and
/// `truth.json`. Re-running with the same config is bit-identical.
pub fn cmd_simulate(
    config_path: Option<&PathBuf>,
    seed_override: Option<u64>,
    out_dir: &Path,
) -> Result<(), CliError> {
    let cfg = load_optional_config(config_path)?;
    let traj = cfg.trajectory.to_core();
    traj.validate()?;
    let k = cfg.simulate.k.unwrap_or(traj.k_max);
    if k == 0 {
        return Err(CliError::Config("simulate.k must be at least 1".into()));
    }
    let sigma_deg = cfg.simulate.sigma_deg.unwrap_or(0.0);
    if sigma_deg < 0.0 {
        return Err(CliError::Config("simulate.sigma_deg must be >= 0".into()));
    }
    let seed = seed_override.or(cfg.simulate.seed).unwrap_or(traj.seed);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let truth = sample_truth(seed);
    let a_global = generate_trajectory(&traj, &traj.initial_a, k, &mut rng)?;
    let b_global = generate_trajectory(&traj, &traj.initial_b, k, &mut rng)?;
    let b_ins: Vec<_> = b_global.iter().map(|p| truth.apply(p)).collect();
    let noiseless = synthesize_set(&truth, &a_global, &b_ins)?;

    // Draw and record the noise stream explicitly so truth.json documents the
    // exact perturbation applied to each row.
    let sigma = sigma_deg.to_radians();
    let mut noise_rng = ChaCha8Rng::seed_from_u64(seed ^ 0xA5A5_A5A5);
    let mut draws = Vec::with_capacity(k);
    let noisy: Vec<_> = noiseless
        .iter()
        .map(|m| {
            let (za, ze) = doa_core::measurement::draw_noise(sigma, &mut noise_rng);
            draws.push((za, ze));
            perturb(m, za, ze)
        })
        .collect();
    let ms = MeasurementSet::new(noisy).expect("indices preserved");

    ensure_out_dir(out_dir)?;
    io::write_measurements(&out_dir.join("measurements.csv"), &ms)?;
    io::write_json(
        &out_dir.join("truth.json"),
        &TruthRecord {
            transform: truth,
            sigma_deg,
            seed,
            noise_draws_rad: draws,
        },
    )?;
    println!(
        "simulated K={k} sigma={sigma_deg} deg seed={seed} -> {}",
        out_dir.display()
    );
    Ok(())
}

#[derive(Debug, serde::Serialize)]
struct CampaignSummary<'a> {
    mean_agent_distance_m: f64,
    cells: &'a [doa_core::sim::CellSummary],
}

/// `campaign`: run the configured grid, streaming per-trial rows to
/// `trials.csv` (flushed per trial) and writing figure-shaped aggregate
/// tables plus `summary.json`.
pub fn cmd_campaign(
    config_path: Option<&PathBuf>,
    seed_override: Option<u64>,
    out_dir: &Path,
    format: OutputFormat,
) -> Result<CampaignResult, CliError> {
    let cfg = load_optional_config(config_path)?;
    let section = cfg
        .campaign
        .as_ref()
        .ok_or_else(|| CliError::Config("config has no campaign section".into()))?;
    let fixed = section
        .fixed_scenario_file
        .as_ref()
        .map(|p| io::read_json(Path::new(p)))
        .transpose()?;
    let spec = section.to_core(seed_override, fixed);
    let traj = cfg.trajectory.to_core();
    let opts = cfg.solver.to_core();

    ensure_out_dir(out_dir)?;
    let mut trial_writer = TrialCsvWriter::create(&out_dir.join("trials.csv"))?;
    let mut write_err: Option<CliError> = None;
    let result = run_campaign_with(&spec, &traj, &opts, |t| {
        if write_err.is_none() {
            if let Err(e) = trial_writer.write(t) {
                write_err = Some(e);
            }
        }
    })?;
    if let Some(e) = write_err {
        return Err(e);
    }

    let ext = match format {
        OutputFormat::Csv => "csv",
        OutputFormat::Json => "json",
    };
    // Same long-format rows in three figure-shaped orderings:
    // fig2 — rotation vs K per σ; fig3 — position vs K per σ;
    // fig4 — rotation vs σ per method.
    let mut by_sigma_k = result.cells.clone();
    by_sigma_k.sort_by(|a, b| {
        (a.sigma, a.k, a.method as usize)
            .partial_cmp(&(b.sigma, b.k, b.method as usize))
            .unwrap()
    });
    io::write_aggregate_table(
        &out_dir.join(format!("fig2_rotation_vs_k.{ext}")),
        &by_sigma_k,
        format,
    )?;
    io::write_aggregate_table(
        &out_dir.join(format!("fig3_position_vs_k.{ext}")),
        &by_sigma_k,
        format,
    )?;
    let mut by_method_sigma = result.cells.clone();
    by_method_sigma.sort_by(|a, b| {
        (a.method as usize, a.sigma, a.k)
            .partial_cmp(&(b.method as usize, b.sigma, b.k))
            .unwrap()
    });
    io::write_aggregate_table(
        &out_dir.join(format!("fig4_rotation_vs_sigma.{ext}")),
        &by_method_sigma,
        format,
    )?;
    io::write_json(
        &out_dir.join("summary.json"),
        &CampaignSummary {
            mean_agent_distance_m: result.mean_agent_distance,
            cells: &result.cells,
        },
    )?;

    let failed: usize = result.cells.iter().map(|c| c.failed).sum();
    let completed: usize = result.cells.iter().map(|c| c.completed).sum();
    println!(
        "campaign: {} cells, {completed} trials completed, {failed} failed, \
         mean inter-agent distance {:.1} m -> {}",
        result.cells.len(),
        result.mean_agent_distance,
        out_dir.display()
    );
    Ok(result)
}

/// `constraints-check`: evaluate the 21 rotation constraints at the estimate
/// stored in a JSON report and print each residual (debugging aid).
pub fn cmd_constraints_check(input: &Path) -> Result<(), CliError> {
    let file: EstimateFile = io::read_json(input)?;
    let transform = FrameTransform::new(file.report.r_bar, file.report.t_bar);
    let psi = UnknownVector::from_transform(&transform);
    let direct = evaluate_constraints_direct(&psi.rotation_block());
    let x = lift(&psi.0);
    let constraints = build_constraints();
    let mut max_abs: f64 = 0.0;
    println!("constraint residuals at {}", input.display());
    for (cm, d) in constraints.iter().zip(direct.iter()) {
        let lifted: f64 = cm
            .q
            .iter()
            .zip(x.iter())
            .map(|(a, b)| a * b)
            .sum();
        max_abs = max_abs.max(d.abs());
        println!("C{:<2} direct {d:+.6e} lifted {lifted:+.6e}", cm.id);
    }
    println!("max |C_i| = {max_abs:.6e}");
    Ok(())
}
