//! Cooperative localisation of a GPS-denied agent (Agent B) relative to the
//! global frame, using discrete-time position broadcasts from a GPS-enabled
//! agent (Agent A) together with noisy direction-of-arrival measurements taken
//! by B in its INS frame.
//!
//! The unknown is the frame drift: a rotation `R ∈ SO(3)` and a translation
//! `T ∈ R³` mapping global coordinates into B's INS frame. Two estimators are
//! provided:
//!
//! - **Noiseless / LS route**: each measurement yields two equations linear in
//!   the twelve unknowns `[r_11 .. r_33, t_1..t_3]`; with `K ≥ 6` generic
//!   measurements the stacked system is solved directly ([`linear_system`]).
//! - **Noisy / SDP+O route**: the constrained least-squares problem is lifted
//!   to a 13×13 positive-semidefinite matrix, the rank-1 requirement is
//!   relaxed, the resulting SDP is solved by a dense interior-point method,
//!   and the extracted rotation block is projected onto SO(3) with the
//!   Orthogonal Procrustes step ([`sdp`], [`procrustes`], [`pipeline`]).
//!
//! A seeded Monte Carlo harness ([`sim`]) generates kinematically plausible
//! fixed-wing trajectories and aggregates median errors across noise levels
//! and measurement counts.

pub mod error;
pub mod frames;
pub mod linear_system;
pub mod measurement;
pub mod pipeline;
pub mod procrustes;
pub mod sdp;
pub mod sim;

pub use error::Error;
pub use frames::{DoaAngles, FrameTransform, Rotation3, Vec3};
pub use linear_system::{LinearSystem, RankDiagnostics, UnknownVector};
pub use measurement::{DoaMeasurement, MeasurementSet, NoiseSpec};
pub use pipeline::{EstimateReport, Method};
pub use sdp::{ConstraintMatrix, SdpProblem, SdpSolution, SolverOptions};
pub use sim::{CampaignResult, CampaignSpec, TrajectoryConfig};
