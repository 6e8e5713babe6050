//! Three-dimensional pursuer/evader engagement simulation.
//!
//! The crate models two point-mass vehicles, expresses their relative motion
//! in line-of-sight (LOS) coordinates, and provides three guidance laws that
//! regulate the LOS rates: input-output linearization, its closing-alignment
//! toggled variant, and proportional navigation. A Monte Carlo layer draws
//! scenario families and summarizes outcomes.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod engagement;
pub mod error;
pub mod geometry;
pub mod guidance;
pub mod montecarlo;
pub mod sim;
pub mod vehicle;

pub use engagement::{CartesianPose, DisturbanceState, EngagementState, LosRates};
pub use error::{Result, SimError};
pub use geometry::{LosAngles, Rotation3, Vec3};
pub use guidance::{Branch, CatsBranchOrder, Controller, GuidanceCommand, GuidanceConfig, GuidanceGains, GuidanceLaw};
pub use montecarlo::{
    aggregate, ecdf, run_batch, BatchResult, BatchStats, CaseId, EcdfSeries, Interval, ScenarioSpec, StatsScope,
};
pub use sim::{run_trial, ManeuverInstance, Outcome, SimConfig, TrajectoryLog, TrialRecord, TrialSetup};
pub use vehicle::{BodyState, Environment, ManeuverCommand, VehicleParams};
