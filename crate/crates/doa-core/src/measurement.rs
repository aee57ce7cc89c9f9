//! Per-instant measurement triples: Agent A's broadcast global position,
//! Agent B's INS position, and the DOA angles B measures towards A, plus the
//! Gaussian angle-noise model used in the experiments.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::frames::{angles_from_vector, wrap_angle, DoaAngles, FrameTransform, Vec3};

/// One time-instant record of the cooperative measurement process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoaMeasurement {
    /// Time index, 1-based and strictly increasing within a set.
    pub k: u32,
    /// Agent A's position in the global frame (metres).
    pub pos_a_global: Vec3,
    /// Agent B's position in its INS frame (metres).
    pub pos_b_ins: Vec3,
    /// DOA from B towards A, in B's INS-aligned frame.
    pub doa: DoaAngles,
}

/// An ordered series of measurements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSet {
    measurements: Vec<DoaMeasurement>,
}

impl MeasurementSet {
    /// Builds a set, requiring at least one measurement and strictly
    /// increasing time indices.
    pub fn new(measurements: Vec<DoaMeasurement>) -> Result<Self> {
        if measurements.is_empty() {
            return Err(Error::InsufficientMeasurements { have: 0, need: 1 });
        }
        for pair in measurements.windows(2) {
            if pair[1].k <= pair[0].k {
                return Err(Error::InvalidConfig(format!(
                    "time indices must be strictly increasing (k={} after k={})",
                    pair[1].k, pair[0].k
                )));
            }
        }
        Ok(MeasurementSet { measurements })
    }

    pub fn len(&self) -> usize {
        self.measurements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.measurements.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &DoaMeasurement> {
        self.measurements.iter()
    }

    pub fn as_slice(&self) -> &[DoaMeasurement] {
        &self.measurements
    }
}

/// Zero-mean Gaussian angle noise, equal standard deviation for azimuth and
/// elevation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// Standard deviation in radians, applied to both angles.
    pub sigma: f64,
    /// RNG seed; draws are deterministic given the seed.
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(sigma: f64, seed: u64) -> Result<Self> {
        if !(sigma >= 0.0) {
            return Err(Error::InvalidConfig(format!("sigma must be >= 0, got {sigma}")));
        }
        Ok(NoiseSpec { sigma, seed })
    }
}

/// Forward model: map A's global position into B's INS frame and take the
/// angles of the displacement towards A.
pub fn synthesize_measurement(
    transform: &FrameTransform,
    k: u32,
    pos_a_global: &Vec3,
    pos_b_ins: &Vec3,
) -> Result<DoaMeasurement> {
    let a_ins = transform.apply(pos_a_global);
    let doa = angles_from_vector(&(a_ins - pos_b_ins))?;
    Ok(DoaMeasurement {
        k,
        pos_a_global: *pos_a_global,
        pos_b_ins: *pos_b_ins,
        doa,
    })
}

/// Synthesizes a whole noiseless measurement set from paired trajectories.
pub fn synthesize_set(
    transform: &FrameTransform,
    pos_a_global: &[Vec3],
    pos_b_ins: &[Vec3],
) -> Result<MeasurementSet> {
    assert_eq!(pos_a_global.len(), pos_b_ins.len());
    let measurements = pos_a_global
        .iter()
        .zip(pos_b_ins)
        .enumerate()
        .map(|(i, (a, b))| synthesize_measurement(transform, (i + 1) as u32, a, b))
        .collect::<Result<Vec<_>>>()?;
    MeasurementSet::new(measurements)
}

/// Applies the given pre-drawn noise values to one measurement, wrapping the
/// azimuth into `(−π, π]` and clamping the elevation into `[−π/2, π/2]`.
pub fn perturb(m: &DoaMeasurement, zeta_azimuth: f64, zeta_elevation: f64) -> DoaMeasurement {
    // Zero perturbation is the exact identity: re-wrapping an already
    // in-range azimuth is not a bitwise no-op, and σ = 0 simulations are
    // expected to reproduce the noiseless synthesis exactly.
    if zeta_azimuth == 0.0 && zeta_elevation == 0.0 {
        return *m;
    }
    DoaMeasurement {
        doa: DoaAngles {
            azimuth: wrap_angle(m.doa.azimuth + zeta_azimuth),
            elevation: (m.doa.elevation + zeta_elevation).clamp(-FRAC_PI_2, FRAC_PI_2),
        },
        ..*m
    }
}

/// Adds independent Gaussian noise to both angles of one measurement.
pub fn add_noise(m: &DoaMeasurement, spec: &NoiseSpec) -> DoaMeasurement {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    add_noise_with_rng(m, spec.sigma, &mut rng)
}

/// As [`add_noise`] but drawing from a caller-owned RNG stream.
pub fn add_noise_with_rng<R: rand::Rng + ?Sized>(
    m: &DoaMeasurement,
    sigma: f64,
    rng: &mut R,
) -> DoaMeasurement {
    let (z1, z2) = draw_noise(sigma, rng);
    perturb(m, z1, z2)
}

/// Draws one independent (azimuth, elevation) noise pair.
pub fn draw_noise<R: rand::Rng + ?Sized>(sigma: f64, rng: &mut R) -> (f64, f64) {
    if sigma == 0.0 {
        return (0.0, 0.0);
    }
    let normal = Normal::new(0.0, sigma).expect("sigma validated non-negative");
    (normal.sample(rng), normal.sample(rng))
}

/// Noises every measurement in a set from a single seeded stream.
pub fn add_noise_set(ms: &MeasurementSet, spec: &NoiseSpec) -> MeasurementSet {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noisy = ms
        .iter()
        .map(|m| add_noise_with_rng(m, spec.sigma, &mut rng))
        .collect();
    MeasurementSet::new(noisy).expect("noising preserves set shape")
}
