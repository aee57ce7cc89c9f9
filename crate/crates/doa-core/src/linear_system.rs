//! Assembly of the stacked linear system `AΨ = b` (two rows per DOA
//! measurement, from cross-multiplying the scaled direction equation), the
//! exact noiseless solve, and rank diagnostics for nongeneric trajectories.

use nalgebra::{DMatrix, DVector, Matrix3, SVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::{FrameTransform, Rotation3, Vec3};
use crate::measurement::{DoaMeasurement, MeasurementSet};

/// Relative SVD threshold used for numerical rank decisions.
pub const DEFAULT_RANK_EPS: f64 = 1e-10;

/// The 12 unknowns, ordered `[r_11 r_12 r_13 r_21 r_22 r_23 r_31 r_32 r_33 t_1 t_2 t_3]`.
///
/// Rotation validity is not an invariant at this level; it is enforced
/// downstream by the SDP constraints or the Procrustes projection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnknownVector(pub SVector<f64, 12>);

impl UnknownVector {
    /// Packs a transform into the unknown ordering (row-major rotation block).
    pub fn from_transform(t: &FrameTransform) -> Self {
        let r = t.rotation.matrix();
        let mut v = SVector::<f64, 12>::zeros();
        for i in 0..3 {
            for j in 0..3 {
                v[3 * i + j] = r[(i, j)];
            }
        }
        v[9] = t.translation.x;
        v[10] = t.translation.y;
        v[11] = t.translation.z;
        UnknownVector(v)
    }

    /// The first nine entries reshaped row-major into a 3×3 matrix.
    pub fn rotation_block(&self) -> Matrix3<f64> {
        Matrix3::new(
            self.0[0], self.0[1], self.0[2], self.0[3], self.0[4], self.0[5], self.0[6], self.0[7],
            self.0[8],
        )
    }

    pub fn translation(&self) -> Vec3 {
        Vec3::new(self.0[9], self.0[10], self.0[11])
    }

    /// Interprets the entries as an (assumed exact) rotation and translation.
    pub fn to_transform_unchecked(&self) -> FrameTransform {
        FrameTransform::new(
            Rotation3::from_matrix_unchecked(self.rotation_block()),
            self.translation(),
        )
    }
}

/// The stacked system `AΨ = b`.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    /// 2K×12 coefficient matrix; translation columns (10–12) are multiplied by
    /// `scale` so the solved translation variables are `t_i / scale`.
    pub a: DMatrix<f64>,
    /// Length-2K right-hand side.
    pub b: DVector<f64>,
    /// Translation normalisation factor in metres (1 = no normalisation).
    pub scale: f64,
}

/// Numerical rank report from the SVD of `A`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RankDiagnostics {
    pub rank: usize,
    /// `σ_max / σ_min`; infinite when the smallest singular value is zero.
    pub condition_number: f64,
    /// All 12 singular values, descending.
    pub singular_values: Vec<f64>,
}

/// The two linear equations contributed by one measurement: the x–z
/// cross-multiplication row and the y–z row, each with its right-hand side.
pub fn rows_for_measurement(m: &DoaMeasurement) -> (SVector<f64, 12>, f64, SVector<f64, 12>, f64) {
    let (st, ct) = m.doa.azimuth.sin_cos();
    let (sp, cp) = m.doa.elevation.sin_cos();
    let a = &m.pos_a_global;
    let b = &m.pos_b_ins;
    let ctcp = ct * cp;
    let stcp = st * cp;

    let mut row_xz = SVector::<f64, 12>::zeros();
    row_xz[0] = a.x * sp;
    row_xz[1] = a.y * sp;
    row_xz[2] = a.z * sp;
    row_xz[6] = -a.x * ctcp;
    row_xz[7] = -a.y * ctcp;
    row_xz[8] = -a.z * ctcp;
    row_xz[9] = sp;
    row_xz[11] = -ctcp;
    let b_xz = b.x * sp - b.z * ctcp;

    let mut row_yz = SVector::<f64, 12>::zeros();
    row_yz[3] = a.x * sp;
    row_yz[4] = a.y * sp;
    row_yz[5] = a.z * sp;
    row_yz[6] = -a.x * stcp;
    row_yz[7] = -a.y * stcp;
    row_yz[8] = -a.z * stcp;
    row_yz[10] = sp;
    row_yz[11] = -stcp;
    let b_yz = b.y * sp - b.z * stcp;

    (row_xz, b_xz, row_yz, b_yz)
}

/// Stacks the 2K×12 system. Translation columns are multiplied by `scale`
/// (Remark-2 style normalisation) so the solved variables are `t_i / scale`.
///
/// Measurements with `sin φ ≈ 0` are individually well-formed but drop the
/// third cross-product the formulation omits; a conditioning warning is
/// logged for them.
pub fn assemble(ms: &MeasurementSet, scale: f64) -> LinearSystem {
    assert!(scale > 0.0, "scale must be positive");
    let k = ms.len();
    let mut a = DMatrix::<f64>::zeros(2 * k, 12);
    let mut b = DVector::<f64>::zeros(2 * k);
    for (i, m) in ms.iter().enumerate() {
        if m.doa.elevation.sin().abs() < 1e-6 {
            log::warn!(
                "measurement k={} has sin(phi)={:.2e}; rows may be poorly conditioned",
                m.k,
                m.doa.elevation.sin()
            );
        }
        let (row_xz, b_xz, row_yz, b_yz) = rows_for_measurement(m);
        for j in 0..12 {
            let col_scale = if j >= 9 { scale } else { 1.0 };
            a[(2 * i, j)] = row_xz[j] * col_scale;
            a[(2 * i + 1, j)] = row_yz[j] * col_scale;
        }
        b[2 * i] = b_xz;
        b[2 * i + 1] = b_yz;
    }
    LinearSystem { a, b, scale }
}

/// SVD-based rank report with threshold `ε·σ_max·max(rows, 12)`.
pub fn rank_diagnostics(ls: &LinearSystem) -> RankDiagnostics {
    rank_diagnostics_with_eps(ls, DEFAULT_RANK_EPS)
}

pub fn rank_diagnostics_with_eps(ls: &LinearSystem, eps: f64) -> RankDiagnostics {
    let svd = ls.a.clone().svd(false, false);
    let mut sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    sv.sort_by(|x, y| y.partial_cmp(x).unwrap());
    // A shorter-than-12 spectrum (fewer than 12 rows) is padded with zeros.
    while sv.len() < 12 {
        sv.push(0.0);
    }
    let sigma_max = sv[0];
    let threshold = eps * sigma_max * (ls.a.nrows().max(12) as f64);
    let rank = sv.iter().filter(|&&s| s > threshold).count();
    let sigma_min = *sv.last().unwrap();
    let condition_number = if sigma_min > 0.0 {
        sigma_max / sigma_min
    } else {
        f64::INFINITY
    };
    RankDiagnostics {
        rank,
        condition_number,
        singular_values: sv,
    }
}

/// Least-squares solve of `AΨ = b` via QR, with the translation entries
/// de-normalised by `scale`. Errors on rank deficiency.
pub fn solve_noiseless(ls: &LinearSystem) -> Result<UnknownVector> {
    let diag = rank_diagnostics(ls);
    if ls.a.nrows() < 12 || diag.rank < 12 {
        return Err(Error::NongenericTrajectory(diag));
    }
    let qr = ls.a.clone().qr();
    let qtb = qr.q().transpose() * &ls.b;
    let mut x = qtb.rows(0, 12).into_owned();
    let r = qr.r();
    assert!(
        r.solve_upper_triangular_mut(&mut x),
        "R is nonsingular when rank(A) = 12"
    );
    let mut psi = SVector::<f64, 12>::zeros();
    for j in 0..12 {
        psi[j] = if j >= 9 { x[j] * ls.scale } else { x[j] };
    }
    Ok(UnknownVector(psi))
}

/// Residual vector `AΨ − b` for a candidate solution in raw (de-normalised)
/// units.
pub fn residual(ls: &LinearSystem, psi: &UnknownVector) -> DVector<f64> {
    let mut z = DVector::<f64>::zeros(12);
    for j in 0..12 {
        z[j] = if j >= 9 { psi.0[j] / ls.scale } else { psi.0[j] };
    }
    &ls.a * z - &ls.b
}
