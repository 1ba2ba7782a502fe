//! Path planning over harmonic potential fields for a robot moving at
//! constant speed among wandering obstacles.
//!
//! The pipeline per planning tick:
//!
//! 1. sensed wall points are fused into an occupancy grid ([`grid`]),
//! 2. obstacle detections feed per-target constant-velocity Kalman
//!    filters ([`tracking`]),
//! 3. each tracked obstacle is assigned a warp number from the elliptical
//!    bands around the robot, which sets how many steps ahead its position
//!    is predicted and stamped into the grid ([`warp`]),
//! 4. the harmonic potential is relaxed with red-black sweeps and the
//!    steepest-descent pointer field extracted ([`field`]),
//! 5. the raw grid path is smoothed by a rubber band ([`band`]),
//! 6. the next waypoint is handed to the vehicle ([`planner`]).
//!
//! A deterministic discrete-time world ([`sim`]) provides walls, wandering
//! obstacles, and noisy sensing for closed-loop experiments.
//!
//! Numeric kernels are generic over the scalar type ([`scalar::Real`],
//! `f32` or `f64`); the aliases at the crate root fix `f64`, which is what
//! the simulator and planner use.

pub mod band;
pub mod field;
pub mod geom;
pub mod grid;
pub mod planner;
pub mod scalar;
pub mod sim;
pub mod tracking;
pub mod warp;

pub use scalar::Real;

/// 2D vector in meters (or grid cell units, by context).
pub type Vec2 = geom::Vec2<f64>;
/// Line segment between two world points.
pub type Segment = geom::Segment<f64>;
/// Grid geometry with `f64` world coordinates.
pub type GridSpec = grid::GridSpec<f64>;
/// Harmonic potential over an `f64` grid.
pub type PotentialField = field::PotentialField<f64>;
/// Smoothable waypoint chain in `f64` cell units.
pub type PathPolyline = band::PathPolyline<f64>;
/// Constant-velocity filter model with `f64` entries.
pub type KalmanModel = tracking::KalmanModel<f64>;
/// Per-obstacle filter state with `f64` entries.
pub type ObstacleTrack = tracking::ObstacleTrack<f64>;
/// Position measurement with `f64` coordinates.
pub type Detection = tracking::Detection<f64>;
/// Elliptical warp-band geometry around the robot, `f64`.
pub type WarpGeometry = warp::WarpGeometry<f64>;
/// Warp number and prediction horizon for one obstacle, `f64`.
pub type WarpAssignment = warp::WarpAssignment<f64>;

pub use band::{BandError, BandParams, ForceBalance};
pub use field::{FieldError, IndexMatrix};
pub use grid::{CellClass, CellIndex, GridError};
pub use planner::{Footprint, PlanStep, Planner, PlannerConfig};
pub use sim::{
    GoalSpec, ObstacleState, RobotState, SensorConfig, SensorFrame, SimConfig, TrialStatus,
    WorldState,
};
pub use tracking::{Association, TrackError, TrackPolicy};
pub use warp::{MarkOutcome, WarpError};
