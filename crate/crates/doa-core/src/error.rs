use crate::linear_system::RankDiagnostics;

/// Errors shared across the estimation pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Agents coincide (or the displacement is numerically zero), so no DOA
    /// direction exists.
    #[error("degenerate displacement: agents coincide, DOA undefined")]
    DegenerateDisplacement,

    /// The assembled coefficient matrix lost full column rank; typically the
    /// broadcasting agent's trajectory was confined to a plane.
    #[error("nongeneric trajectory: coefficient matrix rank {} < 12 (condition number {:.3e})", .0.rank, .0.condition_number)]
    NongenericTrajectory(RankDiagnostics),

    /// Fewer measurements than the chosen method requires.
    #[error("insufficient measurements: have {have}, method requires K >= {need}")]
    InsufficientMeasurements { have: usize, need: usize },

    /// The interior-point solver did not reach the requested tolerances.
    #[error("solver failed after {iterations} iterations: primal infeas {primal_infeasibility:.3e}, dual infeas {dual_infeasibility:.3e}, gap {duality_gap:.3e}")]
    SolverFailed {
        iterations: usize,
        primal_infeasibility: f64,
        dual_infeasibility: f64,
        duality_gap: f64,
    },

    /// The homogenising entry of the leading singular vector vanished, so the
    /// rank-1 factor cannot be rescaled to recover the unknown vector.
    #[error("degenerate extraction: homogenising entry of the rank-1 factor is {0:.3e}")]
    DegenerateExtraction(f64),

    /// The matrix handed to the Procrustes projection has two (near-)zero
    /// singular values; the nearest rotation is not meaningfully defined.
    #[error("ill-defined projection: input matrix has rank < 2")]
    IllDefinedProjection,

    /// A simulation or solver configuration value is unusable.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
