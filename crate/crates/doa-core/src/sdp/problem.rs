//! Cost-matrix construction: `P = [A b]ᵀ[A b]`, so that
//! `⟨P, X(Ψ)⟩ = ‖AΨ − b‖²` for every lifted point.

use nalgebra::DMatrix;

use super::{build_constraints, Mat13, SdpProblem};
use crate::linear_system::LinearSystem;
use crate::measurement::MeasurementSet;

/// Data-driven translation normalisation: `max(1, RMS distance of B's INS
/// positions from their centroid)`, a proxy for the expected size of the
/// translation when it is not known a priori.
pub fn default_translation_scale(ms: &MeasurementSet) -> f64 {
    let k = ms.len() as f64;
    let centroid = ms
        .iter()
        .fold(crate::frames::Vec3::zeros(), |acc, m| acc + m.pos_b_ins)
        / k;
    let rms = (ms
        .iter()
        .map(|m| (m.pos_b_ins - centroid).norm_squared())
        .sum::<f64>()
        / k)
        .sqrt();
    rms.max(1.0)
}

/// Builds the SDP from an assembled linear system. The system's translation
/// normalisation is carried through unchanged.
pub fn build_problem(ls: &LinearSystem) -> SdpProblem {
    build_problem_with_scale(ls, ls.scale)
}

/// As [`build_problem`] but asserting the scale bookkeeping explicitly.
pub fn build_problem_with_scale(ls: &LinearSystem, scale: f64) -> SdpProblem {
    assert_eq!(
        ls.scale, scale,
        "problem scale must match the assembled system"
    );
    let rows = ls.a.nrows();
    let mut ab = DMatrix::<f64>::zeros(rows, 13);
    ab.view_mut((0, 0), (rows, 12)).copy_from(&ls.a);
    ab.view_mut((0, 12), (rows, 1)).copy_from(&ls.b);
    let gram = ab.transpose() * &ab;
    let mut p = Mat13::zeros();
    for i in 0..13 {
        for j in 0..13 {
            p[(i, j)] = gram[(i, j)];
        }
    }
    SdpProblem {
        p,
        ab,
        constraints: build_constraints(),
        scale,
    }
}
