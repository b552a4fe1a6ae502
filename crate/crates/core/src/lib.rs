//! Headless simulator and analysis toolkit for immersive telepresence
//! robots.
//!
//! The robot's yaw can be *unwound* from the camera frame so a user wearing
//! a head-mounted display only sees rotations they make themselves. The
//! crate covers the pieces needed to study that:
//!
//! - [`geometry`]: planar and 3D rotation algebra and the unwinding transform
//! - [`world`]: occupancy grids, scripted pedestrians, scenario files
//! - [`planner`]: Theta* any-angle planning
//! - [`controller`]: a dynamic-window path-tracking controller
//! - [`simulator`]: deterministic runs recorded as byte-exact replay logs
//! - [`analysis`]: pointing error, head deviation, SSQ scoring, run audits
//! - [`stats`]: exact binomial, Clopper–Pearson, Wilcoxon, Mann–Whitney, t-test
//! - [`export`]: the bundle consumed by the browser viewer
//! - [`cli`]: the `unwind-sim` command line

pub mod analysis;
pub mod cli;
pub mod controller;
pub mod export;
pub mod geometry;
pub mod io;
pub mod planner;
pub mod simulator;
pub mod stats;
pub mod world;

pub use geometry::{PlanarRotation, Rotation3, RotationSet, Vec3, ViewMode};
pub use world::{OccupancyGrid, Pedestrian, Point2, Pose, Scenario};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("expected format '{expected}', found '{found}'")]
    Format { expected: String, found: String },
    #[error(transparent)]
    World(#[from] world::WorldError),
    #[error(transparent)]
    Plan(#[from] planner::PlanError),
    #[error(transparent)]
    Control(#[from] controller::ControlError),
    #[error(transparent)]
    Sim(#[from] simulator::SimError),
    #[error(transparent)]
    Analysis(#[from] analysis::AnalysisError),
    #[error(transparent)]
    Stats(#[from] stats::StatsError),
}
