//! Rank-relaxed semidefinite reformulation of the constrained least-squares
//! localisation problem.
//!
//! The 12 unknowns are lifted into a 13×13 matrix `X = [Ψ; −1][Ψ; −1]ᵀ`; the
//! objective `‖AΨ − b‖²` becomes `⟨P, X⟩` with `P = [A b]ᵀ[A b]`, and the 21
//! quadratic rotation constraints become trace constraints `⟨Q_i, X⟩ = 0`.
//! Dropping the rank-1 requirement yields a convex SDP, solved here by a
//! dense primal-dual interior-point method; the estimate is recovered from
//! the leading singular pair of the solution.

mod constraints;
mod extract;
mod problem;
mod solver;

use nalgebra::SMatrix;

pub use constraints::{build_constraints, evaluate_constraints_direct, lift, ConstraintMatrix};
pub use extract::extract_rank1;
pub use problem::{build_problem, build_problem_with_scale, default_translation_scale};
pub use solver::{solve_relaxed, SolverOptions};

/// Symmetric 13×13 matrix used throughout the lifted formulation.
pub type Mat13 = SMatrix<f64, 13, 13>;
/// Length-13 factor vector `[Ψ; −1]`.
pub type Vec13 = nalgebra::SVector<f64, 13>;

/// A (candidate) lifted solution matrix.
#[derive(Debug, Clone)]
pub struct LiftedMatrix {
    pub x: Mat13,
}

impl LiftedMatrix {
    /// Smallest eigenvalue; a valid lifted matrix has this above `−1e-8`.
    pub fn min_eigenvalue(&self) -> f64 {
        self.x
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .fold(f64::INFINITY, |a, &b| a.min(b))
    }

    /// The homogenising corner entry, 1 at feasibility.
    pub fn corner(&self) -> f64 {
        self.x[(12, 12)]
    }
}

/// The assembled SDP: cost matrix, the 21 rotation constraints, and the
/// translation normalisation carried over from the linear system.
#[derive(Debug, Clone)]
pub struct SdpProblem {
    /// `P = [A b]ᵀ[A b]`, positive semidefinite by construction.
    pub p: Mat13,
    /// The stacked `[A b]` data matrix (2K×13). Kept alongside the Gram form
    /// because residual evaluation through `P` squares the conditioning of
    /// `A`; the solution-polish step needs the un-squared system.
    pub ab: nalgebra::DMatrix<f64>,
    pub constraints: Vec<ConstraintMatrix>,
    /// Metres; the lifted translation variables are `t_i / scale`.
    pub scale: f64,
}

/// Output of the relaxed solve, including the extracted near-rank-1 estimate.
#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub x: LiftedMatrix,
    /// `⟨P, X⟩` at the solution (raw units).
    pub objective: f64,
    /// `σ₂/σ₁` of `X`; 0 for an exactly rank-1 solution.
    pub rank1_ratio: f64,
    /// Extracted unknown vector with translations de-normalised to metres.
    pub psi_hat: crate::linear_system::UnknownVector,
    pub solver_iterations: usize,
    /// Translation normalisation used by the problem (needed to re-extract).
    pub scale: f64,
}
