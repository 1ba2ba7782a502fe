//! Closed-loop trial execution: sense, update the map, plan, move the
//! robot, move the obstacles, check for termination.

use warpgrid_core::planner::PlanStep;
use warpgrid_core::sim::{ObstacleState, TrialStatus};
use warpgrid_core::{CellIndex, Vec2};

use crate::metrics::{path_length_m, turning_angles_deg, Outcome, TrialMetrics};
use crate::scenario::{build_trial, Scenario, ScenarioError};

/// Metrics plus the raw material the SVG renderer and the acceptance
/// suite work from.
#[derive(Debug, Clone)]
pub struct TrialRecord {
    pub metrics: TrialMetrics,
    /// Robot position per tick, including the start.
    pub trajectory: Vec<Vec2>,
    /// Final planned (rubber-banded) path in world coordinates.
    pub planned_path: Vec<Vec2>,
    /// Predicted footprints stamped on the final tick: center, radius.
    pub footprints: Vec<(Vec2, f64)>,
    /// Final Kalman estimates: position, velocity.
    pub track_estimates: Vec<(Vec2, Vec2)>,
    /// Accumulated static map cells.
    pub static_cells: Vec<CellIndex>,
    /// Obstacle states at the end of the trial.
    pub final_obstacles: Vec<ObstacleState>,
    pub obstacle_count: usize,
    pub seed: u64,
    /// Planning ticks that returned no path.
    pub blocked_ticks: u64,
}

/// Ticks allowed for one trial: `time_limit_factor` times the straight-line
/// traversal time.
pub fn tick_limit(scenario: &Scenario) -> u64 {
    let straight = scenario.robot_start().distance(scenario.goal_pos());
    let dt = scenario.sim.dt.unwrap_or(0.1);
    let ticks = scenario.time_limit_factor * straight / (scenario.robot.speed * dt);
    (ticks.ceil() as u64).max(50)
}

/// Run one seeded trial to termination.
pub fn run_trial(
    scenario: &Scenario,
    seed: u64,
    obstacle_count: Option<usize>,
) -> Result<TrialRecord, ScenarioError> {
    let (mut world, mut planner) = build_trial(scenario, seed, obstacle_count)?;
    let limit = tick_limit(scenario);
    let mut trajectory = vec![world.robot.pos];
    let mut last_waypoint: Option<Vec2> = None;
    let mut blocked_ticks = 0u64;

    let outcome = loop {
        if world.tick >= limit {
            break Outcome::Timeout;
        }
        let frame = world.sense();
        let robot = world.robot;
        planner.map_update(&frame, &robot);
        let target = match planner.plan_tick(&robot) {
            PlanStep::Waypoint(w) => {
                last_waypoint = Some(w);
                Some(w)
            }
            // Blocked: keep moving toward the previous waypoint while it is
            // still meaningfully ahead; fall back to the planner's local
            // drift target, then to holding the heading.
            PlanStep::Blocked { drift } => {
                blocked_ticks += 1;
                last_waypoint
                    .filter(|w| w.distance(world.robot.pos) > 0.05)
                    .or(drift)
            }
        };
        world.step_robot(target);
        world.step_obstacles();
        trajectory.push(world.robot.pos);
        match world.status() {
            TrialStatus::Success => break Outcome::Success,
            TrialStatus::Collision => break Outcome::Collision,
            TrialStatus::Running => {}
        }
    };

    let metrics = TrialMetrics {
        outcome,
        path_length_cm: path_length_m(&trajectory) * 100.0,
        turning_angles_deg: turning_angles_deg(&trajectory),
        ticks_elapsed: world.tick,
        seed,
    };
    let spec = *planner.spec();
    let planned_path = planner
        .planned_path()
        .map(|p| p.points().iter().map(|u| spec.units_to_world(*u)).collect())
        .unwrap_or_default();
    let mut static_cells: Vec<CellIndex> = planner.static_map().iter().copied().collect();
    static_cells.sort_unstable();
    Ok(TrialRecord {
        metrics,
        trajectory,
        planned_path,
        footprints: planner
            .footprints()
            .iter()
            .map(|f| (f.center, f.radius))
            .collect(),
        track_estimates: planner
            .tracks()
            .iter()
            .map(|t| (t.position(), t.velocity()))
            .collect(),
        static_cells,
        final_obstacles: world.obstacles.clone(),
        obstacle_count: world.obstacles.len(),
        seed,
        blocked_ticks,
    })
}

/// Trajectory dump: one row per tick.
pub fn trajectory_csv(record: &TrialRecord) -> String {
    let mut out = String::from("tick,x,y\n");
    for (i, p) in record.trajectory.iter().enumerate() {
        out.push_str(&format!("{},{:.6},{:.6}\n", i, p.x, p.y));
    }
    out
}
