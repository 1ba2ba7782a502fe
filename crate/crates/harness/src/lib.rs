//! Experiment harness for the navigation stack: scenario files, seeded
//! closed-loop trials, batch sweeps over obstacle counts, metrics with CSV
//! persistence, SVG rendering, and the grid A* reference planner used to
//! judge results.

pub mod astar;
pub mod batch;
pub mod metrics;
pub mod scenario;
pub mod snapshot;
pub mod svg;
pub mod trial;

pub use batch::{aggregate, run_batch, BatchReport, TrialRow};
pub use metrics::{turning_angle_histogram, Outcome, TrialMetrics};
pub use scenario::{build_trial, Scenario, ScenarioError};
pub use trial::{run_trial, TrialRecord};
