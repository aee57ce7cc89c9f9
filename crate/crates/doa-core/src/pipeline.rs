//! End-to-end estimators and error metrics.
//!
//! `SDP+O` is the main noisy-measurement pipeline: assemble → lift → relaxed
//! SDP → rank-1 extraction → Procrustes projection. `LS+O` is the baseline:
//! unconstrained least squares followed by the same projection. An optional
//! gradient-descent refinement minimises the cumulative bearing residual from
//! a given initial estimate.

use nalgebra::{Matrix3, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::{
    angles_from_vector, geodesic_distance, wrap_angle, FrameTransform, Rotation3, Vec3,
};
use crate::linear_system::{assemble, rank_diagnostics, solve_noiseless};
use crate::measurement::MeasurementSet;
use crate::procrustes::nearest_rotation;
use crate::sdp::{build_problem, default_translation_scale, solve_relaxed, SolverOptions};

/// Which estimator produced a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "SDP_O")]
    SdpO,
    #[serde(rename = "LS_O")]
    LsO,
    #[serde(rename = "SDP_O_REFINED")]
    SdpORefined,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Method::SdpO => write!(f, "SDP_O"),
            Method::LsO => write!(f, "LS_O"),
            Method::SdpORefined => write!(f, "SDP_O_REFINED"),
        }
    }
}

/// Solver and conditioning diagnostics attached to an estimate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Diagnostics {
    /// `‖AΨ − b‖²` at the estimate (LS route) or `⟨P, X⟩` (SDP route).
    pub objective: f64,
    /// `σ₂/σ₁` of the lifted solution; absent for the LS route.
    pub rank1_ratio: Option<f64>,
    pub rank: usize,
    pub condition_number: f64,
}

/// A finished estimate with reconstruction and (when truth is known) errors.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimateReport {
    pub method: Method,
    pub r_bar: Rotation3,
    /// Metres.
    pub t_bar: Vec3,
    /// Geodesic rotation error in radians; present only when truth is known.
    pub rotation_error: Option<f64>,
    /// Mean reconstruction error in metres; present only when truth is known.
    pub position_error: Option<f64>,
    /// `R̄ᵀ(P_B^B(k) − T̄)` for every measurement.
    pub reconstructed_b_global: Vec<Vec3>,
    pub diagnostics: Diagnostics,
    /// Set when the Procrustes minimiser was non-unique or refinement hit its
    /// iteration cap.
    pub warning: Option<String>,
}

/// Geodesic rotation-error metric.
pub fn rotation_error(r_est: &Rotation3, r_true: &Rotation3) -> f64 {
    geodesic_distance(r_est, r_true)
}

/// Mean Euclidean distance between the reconstructed and true global
/// positions of B over the measurement set.
pub fn position_error(
    ms: &MeasurementSet,
    r_est: &Rotation3,
    t_est: &Vec3,
    truth: &FrameTransform,
) -> f64 {
    let inv_truth = truth.inverse();
    let sum: f64 = ms
        .iter()
        .map(|m| {
            let reconstructed = r_est.transpose().rotate(&(m.pos_b_ins - t_est));
            let true_global = inv_truth.apply(&m.pos_b_ins);
            (reconstructed - true_global).norm()
        })
        .sum();
    sum / ms.len() as f64
}

fn reconstruct(ms: &MeasurementSet, r_bar: &Rotation3, t_bar: &Vec3) -> Vec<Vec3> {
    ms.iter()
        .map(|m| r_bar.transpose().rotate(&(m.pos_b_ins - t_bar)))
        .collect()
}

fn finish_report(
    method: Method,
    ms: &MeasurementSet,
    r_bar: Rotation3,
    t_bar: Vec3,
    diagnostics: Diagnostics,
    warning: Option<String>,
    truth: Option<&FrameTransform>,
) -> EstimateReport {
    EstimateReport {
        method,
        rotation_error: truth.map(|t| rotation_error(&r_bar, &t.rotation)),
        position_error: truth.map(|t| position_error(ms, &r_bar, &t_bar, t)),
        reconstructed_b_global: reconstruct(ms, &r_bar, &t_bar),
        r_bar,
        t_bar,
        diagnostics,
        warning,
    }
}

/// The paper's noisy-measurement pipeline: relaxed SDP plus Procrustes.
/// Requires `K ≥ 4`; the rotation constraints substitute for the missing
/// measurements below `K = 6`.
pub fn estimate_sdp_o(
    ms: &MeasurementSet,
    opts: &SolverOptions,
    truth: Option<&FrameTransform>,
) -> Result<EstimateReport> {
    if ms.len() < 4 {
        return Err(Error::InsufficientMeasurements {
            have: ms.len(),
            need: 4,
        });
    }
    let scale = opts
        .scale_override
        .unwrap_or_else(|| default_translation_scale(ms));
    let ls = assemble(ms, scale);
    let diag = rank_diagnostics(&ls);
    // With K ≥ 6 the system is generically full rank; a deficit there means a
    // degenerate (e.g. planar) trajectory, which the relaxation cannot fix.
    // Below K = 6 the deficit is inherent and the constraints substitute.
    if ms.len() >= 6 && diag.rank < 12 {
        return Err(Error::NongenericTrajectory(diag));
    }
    let problem = build_problem(&ls);
    let sol = solve_relaxed(&problem, opts)?;
    let proj = nearest_rotation(&sol.psi_hat.rotation_block())?;
    let warning = proj
        .non_unique
        .then(|| "procrustes minimiser non-unique".to_string());
    let diagnostics = Diagnostics {
        objective: sol.objective,
        rank1_ratio: Some(sol.rank1_ratio),
        rank: diag.rank,
        condition_number: diag.condition_number,
    };
    Ok(finish_report(
        Method::SdpO,
        ms,
        proj.rotation,
        sol.psi_hat.translation(),
        diagnostics,
        warning,
        truth,
    ))
}

/// Baseline: unconstrained least squares, then Procrustes on the rotation
/// block. Requires `K ≥ 6` and a generic (full-column-rank) trajectory.
pub fn estimate_ls_o(
    ms: &MeasurementSet,
    opts: &SolverOptions,
    truth: Option<&FrameTransform>,
) -> Result<EstimateReport> {
    if ms.len() < 6 {
        return Err(Error::InsufficientMeasurements {
            have: ms.len(),
            need: 6,
        });
    }
    let scale = opts
        .scale_override
        .unwrap_or_else(|| default_translation_scale(ms));
    let ls = assemble(ms, scale);
    let diag = rank_diagnostics(&ls);
    let psi = solve_noiseless(&ls)?;
    let residual = crate::linear_system::residual(&ls, &psi).norm_squared();
    let proj = nearest_rotation(&psi.rotation_block())?;
    let warning = proj
        .non_unique
        .then(|| "procrustes minimiser non-unique".to_string());
    let diagnostics = Diagnostics {
        objective: residual,
        rank1_ratio: None,
        rank: diag.rank,
        condition_number: diag.condition_number,
    };
    Ok(finish_report(
        Method::LsO,
        ms,
        proj.rotation,
        psi.translation(),
        diagnostics,
        warning,
        truth,
    ))
}

/// Options for the bearing-residual refinement.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RefineOptions {
    pub max_iter: usize,
    /// Stop when the gradient norm falls below this.
    pub gradient_tol: f64,
}

impl Default for RefineOptions {
    fn default() -> Self {
        RefineOptions {
            max_iter: 200,
            gradient_tol: 1e-12,
        }
    }
}

/// Cumulative squared bearing error of a candidate transform against the
/// measured angles, with azimuth residuals wrapped into `(−π, π]`.
pub fn bearing_cost(ms: &MeasurementSet, transform: &FrameTransform) -> f64 {
    ms.iter()
        .map(|m| {
            let d = transform.apply(&m.pos_a_global) - m.pos_b_ins;
            match angles_from_vector(&d) {
                Ok(pred) => {
                    let e_theta = wrap_angle(pred.azimuth - m.doa.azimuth);
                    let e_phi = pred.elevation - m.doa.elevation;
                    e_theta * e_theta + e_phi * e_phi
                }
                Err(_) => f64::INFINITY,
            }
        })
        .sum()
}

fn skew(v: &Vec3) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

fn exp_so3(omega: &Vec3) -> Matrix3<f64> {
    let theta = omega.norm();
    let k = skew(omega);
    if theta < 1e-12 {
        Matrix3::identity() + k + 0.5 * k * k
    } else {
        Matrix3::identity() + (theta.sin() / theta) * k
            + ((1.0 - theta.cos()) / (theta * theta)) * (k * k)
    }
}

/// Right Jacobian of the exponential map on SO(3).
fn right_jacobian(omega: &Vec3) -> Matrix3<f64> {
    let theta = omega.norm();
    let k = skew(omega);
    if theta < 1e-6 {
        Matrix3::identity() - 0.5 * k + (1.0 / 6.0) * (k * k)
    } else {
        let t2 = theta * theta;
        Matrix3::identity() - ((1.0 - theta.cos()) / t2) * k
            + ((theta - theta.sin()) / (t2 * theta)) * (k * k)
    }
}

/// Candidate transform at local 6-DOF coordinates `(ω, δ)` about a base:
/// `R = R₀·exp(ω̂)`, `T = T₀ + δ`.
pub fn chart_transform(base: &FrameTransform, params: &Vector6<f64>) -> FrameTransform {
    let omega = Vector3::new(params[0], params[1], params[2]);
    let delta = Vector3::new(params[3], params[4], params[5]);
    FrameTransform::new(
        Rotation3::from_matrix_unchecked(base.rotation.matrix() * exp_so3(&omega)),
        base.translation + delta,
    )
}

/// Analytic gradient of [`bearing_cost`] with respect to the local 6-DOF
/// coordinates, evaluated at an arbitrary chart point.
pub fn bearing_cost_gradient(
    ms: &MeasurementSet,
    base: &FrameTransform,
    params: &Vector6<f64>,
) -> Vector6<f64> {
    let omega = Vector3::new(params[0], params[1], params[2]);
    let current = chart_transform(base, params);
    let r = current.rotation.matrix();
    let jr = right_jacobian(&omega);
    let mut grad = Vector6::zeros();
    for m in ms.iter() {
        let d = current.apply(&m.pos_a_global) - m.pos_b_ins;
        let rho2 = d.x * d.x + d.y * d.y;
        let r2 = rho2 + d.z * d.z;
        if rho2 < 1e-18 || r2 < 1e-18 {
            continue;
        }
        let rho = rho2.sqrt();
        let pred = angles_from_vector(&d).expect("non-degenerate displacement");
        let e_theta = wrap_angle(pred.azimuth - m.doa.azimuth);
        let e_phi = pred.elevation - m.doa.elevation;

        let dtheta_dd = Vector3::new(-d.y / rho2, d.x / rho2, 0.0);
        let dphi_dd = Vector3::new(
            -d.x * d.z / (r2 * rho),
            -d.y * d.z / (r2 * rho),
            rho / r2,
        );
        // d(R·a)/dω = −R·[a]_×·J_r(ω); d/dδ = I.
        let dd_domega = -r * skew(&m.pos_a_global) * jr;
        let combined = 2.0 * (e_theta * dtheta_dd + e_phi * dphi_dd);
        let g_omega = dd_domega.transpose() * combined;
        for i in 0..3 {
            grad[i] += g_omega[i];
            grad[3 + i] += combined[i];
        }
    }
    grad
}

/// Gradient-descent refinement of an initial estimate by minimising the
/// cumulative bearing residual. The returned cost trace is monotonically
/// non-increasing over accepted steps; the result never has a higher cost
/// than the initial point.
pub fn refine_mle(
    ms: &MeasurementSet,
    initial: &EstimateReport,
    opts: &RefineOptions,
    truth: Option<&FrameTransform>,
) -> EstimateReport {
    let mut base = FrameTransform::new(initial.r_bar, initial.t_bar);
    let mut cost = bearing_cost(ms, &base);
    let mut trace = vec![cost];
    let mut warning = None;
    let mut step = 1.0;

    for iter in 0..opts.max_iter {
        // Re-centred chart: gradient evaluated at the origin each iteration.
        let grad = bearing_cost_gradient(ms, &base, &Vector6::zeros());
        let g2 = grad.norm_squared();
        if g2.sqrt() < opts.gradient_tol {
            break;
        }
        // Backtracking line search with the Armijo condition.
        let mut accepted = false;
        let mut alpha = step;
        for _ in 0..50 {
            let candidate = chart_transform(&base, &(-alpha * grad));
            let c = bearing_cost(ms, &candidate);
            if c <= cost - 1e-4 * alpha * g2 {
                base = candidate;
                cost = c;
                trace.push(c);
                step = (alpha * 2.0).min(1e6);
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            break;
        }
        if iter + 1 == opts.max_iter {
            warning = Some("refinement iteration cap reached".to_string());
        }
    }

    let diagnostics = Diagnostics {
        objective: cost,
        rank1_ratio: initial.diagnostics.rank1_ratio,
        rank: initial.diagnostics.rank,
        condition_number: initial.diagnostics.condition_number,
    };
    let mut report = finish_report(
        Method::SdpORefined,
        ms,
        base.rotation,
        base.translation,
        diagnostics,
        warning,
        truth,
    );
    log::debug!(
        "refinement: {} accepted steps, cost {} -> {}",
        trace.len() - 1,
        trace.first().unwrap(),
        cost
    );
    report.warning = report.warning.or(initial.warning.clone());
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::{add_noise_set, synthesize_set, NoiseSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn generic_scenario(
        rng: &mut ChaCha8Rng,
        k: usize,
    ) -> (FrameTransform, MeasurementSet) {
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
        (truth, synthesize_set(&truth, &a, &b_ins).unwrap())
    }

    #[test]
    fn sdp_o_noiseless_recovery() {
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        let (truth, ms) = generic_scenario(&mut rng, 6);
        let report = estimate_sdp_o(&ms, &SolverOptions::default(), Some(&truth)).unwrap();
        assert!(report.rotation_error.unwrap() < 1e-6);
        assert!(report.position_error.unwrap() < 1e-4);
    }

    #[test]
    fn ls_o_matches_sdp_o_on_noiseless_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(72);
        let (truth, ms) = generic_scenario(&mut rng, 6);
        let sdp = estimate_sdp_o(&ms, &SolverOptions::default(), Some(&truth)).unwrap();
        let lso = estimate_ls_o(&ms, &SolverOptions::default(), Some(&truth)).unwrap();
        assert!((sdp.r_bar.matrix() - lso.r_bar.matrix()).norm() < 1e-6);
        assert!((sdp.t_bar - lso.t_bar).norm() < 1e-4);
    }

    #[test]
    fn ls_o_underdetermined_at_k4() {
        let mut rng = ChaCha8Rng::seed_from_u64(73);
        let (_, ms) = generic_scenario(&mut rng, 4);
        assert!(matches!(
            estimate_ls_o(&ms, &SolverOptions::default(), None),
            Err(Error::InsufficientMeasurements { .. })
        ));
    }

    #[test]
    fn sdp_o_k4_with_noise_produces_valid_rotation() {
        let mut rng = ChaCha8Rng::seed_from_u64(74);
        let (truth, ms) = generic_scenario(&mut rng, 4);
        let noisy = add_noise_set(&ms, &NoiseSpec::new(1.0_f64.to_radians(), 5).unwrap());
        let report = estimate_sdp_o(&noisy, &SolverOptions::default(), Some(&truth)).unwrap();
        assert!(report.r_bar.orthogonality_defect() < 1e-9);
        assert!((report.r_bar.determinant() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn position_error_pure_offset() {
        // With R̄ = R_true and T̄ = T_true + R_true-aligned unit offset, the
        // reconstruction shifts by exactly 1 m at every instant.
        let mut rng = ChaCha8Rng::seed_from_u64(75);
        let (truth, ms) = generic_scenario(&mut rng, 6);
        // Choose the offset so the global-frame shift has unit norm:
        // R̄ᵀ(P − (T+e)) − R̄ᵀ(P − T) = −R̄ᵀe, which has norm ‖e‖.
        let offset = truth.rotation.rotate(&Vec3::new(1.0, 0.0, 0.0));
        let t_est = truth.translation + offset;
        let err = position_error(&ms, &truth.rotation, &t_est, &truth);
        assert!((err - 1.0).abs() < 1e-10, "error {err}");
        assert!(position_error(&ms, &truth.rotation, &truth.translation, &truth) < 1e-9);
    }

    #[test]
    fn refine_from_truth_is_stationary() {
        let mut rng = ChaCha8Rng::seed_from_u64(76);
        let (truth, ms) = generic_scenario(&mut rng, 6);
        let initial = estimate_sdp_o(&ms, &SolverOptions::default(), Some(&truth)).unwrap();
        let cost0 = bearing_cost(&ms, &FrameTransform::new(initial.r_bar, initial.t_bar));
        let refined = refine_mle(&ms, &initial, &RefineOptions::default(), Some(&truth));
        let cost1 = bearing_cost(&ms, &FrameTransform::new(refined.r_bar, refined.t_bar));
        assert!(cost1 <= cost0 + 1e-18);
        // Noiseless data: the initial point is already (numerically) optimal.
        assert!(cost1 < 1e-10);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let (truth, ms) = generic_scenario(&mut rng, 6);
        let noisy = add_noise_set(&ms, &NoiseSpec::new(3.0_f64.to_radians(), 2).unwrap());
        let base = truth;
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            let params = Vector6::from_fn(|i, _| {
                if i < 3 {
                    rng.gen_range(-0.3..0.3)
                } else {
                    rng.gen_range(-20.0..20.0)
                }
            });
            let analytic = bearing_cost_gradient(&noisy, &base, &params);
            let mut numeric = Vector6::zeros();
            let h = 1e-6;
            for i in 0..6 {
                let mut up = params;
                let mut dn = params;
                up[i] += h;
                dn[i] -= h;
                numeric[i] = (bearing_cost(&noisy, &chart_transform(&base, &up))
                    - bearing_cost(&noisy, &chart_transform(&base, &dn)))
                    / (2.0 * h);
            }
            let rel = (analytic - numeric).norm() / numeric.norm().max(1e-8);
            worst = worst.max(rel);
        }
        assert!(worst < 1e-5, "worst relative gradient error {worst}");
    }

    #[test]
    fn refinement_cost_non_increasing_under_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(78);
        let (truth, ms) = generic_scenario(&mut rng, 6);
        let noisy = add_noise_set(&ms, &NoiseSpec::new(3.0_f64.to_radians(), 3).unwrap());
        let initial = estimate_sdp_o(&noisy, &SolverOptions::default(), Some(&truth)).unwrap();
        let cost0 = bearing_cost(&noisy, &FrameTransform::new(initial.r_bar, initial.t_bar));
        let refined = refine_mle(&noisy, &initial, &RefineOptions::default(), Some(&truth));
        let cost1 = bearing_cost(&noisy, &FrameTransform::new(refined.r_bar, refined.t_bar));
        assert!(cost1 <= cost0);
    }
}
