//! File formats: measurement CSV, ground-truth JSON, estimate JSON, and the
//! campaign trial/aggregate tables.
//!
//! All floating-point values are written with 17 significant digits so a
//! write/read cycle reproduces every `f64` bit-exactly.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use doa_core::frames::{DoaAngles, FrameTransform, Vec3};
use doa_core::measurement::{DoaMeasurement, MeasurementSet};
use doa_core::pipeline::{EstimateReport, Method};
use doa_core::sim::{CellSummary, TrialRecord};

use crate::CliError;

pub const MEASUREMENT_HEADER: [&str; 9] = [
    "k", "u_A", "v_A", "w_A", "x_B", "y_B", "z_B", "theta_rad", "phi_rad",
];

/// 17 significant digits: enough for any `f64` to round-trip bit-exactly.
fn fmt_f64(x: f64) -> String {
    let s = format!("{x:.16e}");
    debug_assert_eq!(s.parse::<f64>().ok(), Some(x));
    s
}

pub fn write_measurements(path: &Path, ms: &MeasurementSet) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(MEASUREMENT_HEADER)?;
    for m in ms.iter() {
        w.write_record([
            m.k.to_string(),
            fmt_f64(m.pos_a_global.x),
            fmt_f64(m.pos_a_global.y),
            fmt_f64(m.pos_a_global.z),
            fmt_f64(m.pos_b_ins.x),
            fmt_f64(m.pos_b_ins.y),
            fmt_f64(m.pos_b_ins.z),
            fmt_f64(m.doa.azimuth),
            fmt_f64(m.doa.elevation),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn parse_field(record: &csv::StringRecord, idx: usize, line: u64) -> Result<f64, CliError> {
    let raw = record
        .get(idx)
        .ok_or_else(|| CliError::Parse(format!("line {line}: missing column {}", idx + 1)))?;
    raw.trim().parse::<f64>().map_err(|_| {
        CliError::Parse(format!(
            "line {line}: column {} ({}) is not a number: {raw:?}",
            idx + 1,
            MEASUREMENT_HEADER[idx]
        ))
    })
}

pub fn read_measurements(path: &Path) -> Result<MeasurementSet, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let header = reader.headers()?.clone();
    if header.len() != MEASUREMENT_HEADER.len() {
        return Err(CliError::Parse(format!(
            "line 1: expected {} columns ({}), found {}",
            MEASUREMENT_HEADER.len(),
            MEASUREMENT_HEADER.join(","),
            header.len()
        )));
    }
    let mut rows = Vec::new();
    for result in reader.records() {
        let record = result?;
        let line = record
            .position()
            .map(|p| p.line())
            .unwrap_or(rows.len() as u64 + 2);
        if record.len() != MEASUREMENT_HEADER.len() {
            return Err(CliError::Parse(format!(
                "line {line}: expected {} fields, found {}",
                MEASUREMENT_HEADER.len(),
                record.len()
            )));
        }
        let k: u32 = record
            .get(0)
            .unwrap()
            .parse()
            .map_err(|_| CliError::Parse(format!("line {line}: bad index k {:?}", record.get(0))))?;
        let fields: Vec<f64> = (1..9)
            .map(|i| parse_field(&record, i, line))
            .collect::<Result<_, _>>()?;
        rows.push(DoaMeasurement {
            k,
            pos_a_global: Vec3::new(fields[0], fields[1], fields[2]),
            pos_b_ins: Vec3::new(fields[3], fields[4], fields[5]),
            doa: DoaAngles::new(fields[6], fields[7]),
        });
    }
    MeasurementSet::new(rows).map_err(|e| CliError::Parse(format!("{e}")))
}

/// Ground-truth record written by `simulate`.
#[derive(Debug, serde::Serialize, serde::Deserialize)]
pub struct TruthRecord {
    pub transform: FrameTransform,
    pub sigma_deg: f64,
    pub seed: u64,
    /// Per-measurement noise draws (azimuth, elevation) in radians.
    pub noise_draws_rad: Vec<(f64, f64)>,
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

/// Streaming writer for the long-format trial table; each row is flushed as
/// it is written, so an interrupted campaign leaves all completed trials on
/// disk.
pub struct TrialCsvWriter {
    w: csv::Writer<File>,
}

impl TrialCsvWriter {
    pub fn create(path: &Path) -> Result<Self, CliError> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record([
            "sigma_deg",
            "K",
            "method",
            "trial",
            "rotation_error_rad",
            "position_error_m",
            "status",
        ])?;
        w.flush()?;
        Ok(TrialCsvWriter { w })
    }

    pub fn write(&mut self, t: &TrialRecord) -> Result<(), CliError> {
        self.w.write_record([
            fmt_f64(t.sigma.to_degrees()),
            t.k.to_string(),
            t.method.to_string(),
            t.trial.to_string(),
            t.rotation_error.map(fmt_f64).unwrap_or_default(),
            t.position_error.map(fmt_f64).unwrap_or_default(),
            t.status.clone(),
        ])?;
        self.w.flush()?;
        Ok(())
    }
}

/// Output format for aggregate tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, serde::Serialize)]
struct AggregateRow<'a> {
    method: &'a str,
    sigma_deg: f64,
    k: usize,
    median_rotation_error_rad: Option<f64>,
    median_position_error_m: Option<f64>,
    completed: usize,
    failed: usize,
    flagged: bool,
}

fn aggregate_rows(cells: &[CellSummary]) -> Vec<AggregateRow<'_>> {
    cells
        .iter()
        .map(|c| AggregateRow {
            method: match c.method {
                Method::SdpO => "SDP_O",
                Method::LsO => "LS_O",
                Method::SdpORefined => "SDP_O_REFINED",
            },
            sigma_deg: c.sigma.to_degrees(),
            k: c.k,
            median_rotation_error_rad: c.median_rotation_error,
            median_position_error_m: c.median_position_error,
            completed: c.completed,
            failed: c.failed,
            flagged: c.flagged,
        })
        .collect()
}

/// Writes one aggregate table. `fig2`-style tables order rows by (σ, K);
/// `fig4`-style by (method, σ); the row content is identical, so a single
/// long-format writer serves all three figure shapes.
pub fn write_aggregate_table(
    path: &Path,
    cells: &[CellSummary],
    format: OutputFormat,
) -> Result<(), CliError> {
    let rows = aggregate_rows(cells);
    match format {
        OutputFormat::Json => write_json(path, &rows),
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_path(path)?;
            w.write_record([
                "method",
                "sigma_deg",
                "K",
                "median_rotation_error_rad",
                "median_position_error_m",
                "completed",
                "failed",
                "flagged",
            ])?;
            for r in rows {
                w.write_record([
                    r.method.to_string(),
                    fmt_f64(r.sigma_deg),
                    r.k.to_string(),
                    r.median_rotation_error_rad.map(fmt_f64).unwrap_or_default(),
                    r.median_position_error_m.map(fmt_f64).unwrap_or_default(),
                    r.completed.to_string(),
                    r.failed.to_string(),
                    r.flagged.to_string(),
                ])?;
            }
            w.flush()?;
            Ok(())
        }
    }
}

/// Serialisable estimate wrapper (adds the input file for traceability).
#[derive(Debug, serde::Serialize, serde::Deserialize)]
pub struct EstimateFile {
    pub input: String,
    #[serde(flatten)]
    pub report: EstimateReport,
}
