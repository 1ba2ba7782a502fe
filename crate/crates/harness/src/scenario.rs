//! Declarative scenario files: world geometry, robot and goal, obstacle
//! spawning rules, and sensor/planner overrides. The on-disk format is
//! TOML; the full schema is documented in the repository README and the
//! bundled files under `scenarios/`.

use serde::Deserialize;
use thiserror::Error;

use warpgrid_core::planner::{Planner, PlannerConfig};
use warpgrid_core::sim::{
    GoalSpec, ObstacleState, RobotState, SensorConfig, SimConfig, WorldState,
};
use warpgrid_core::{GridSpec, Segment, Vec2};

use rand::Rng;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("failed to read scenario: {0}")]
    Io(#[from] std::io::Error),
    #[error("failed to parse scenario: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

fn d_cell_size() -> f64 {
    0.1
}
fn d_time_limit_factor() -> f64 {
    5.0
}
fn d_robot_speed() -> f64 {
    0.4
}
fn d_robot_radius() -> f64 {
    0.25
}
fn d_goal_radius() -> f64 {
    0.3
}
fn d_count() -> usize {
    1
}
fn d_speed_range() -> [f64; 2] {
    [0.2, 0.5]
}
fn d_obstacle_radius() -> f64 {
    0.25
}
fn d_clear_robot() -> f64 {
    2.0
}
fn d_clear_goal() -> f64 {
    1.0
}
fn d_clear_walls() -> f64 {
    0.4
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    /// World rectangle in meters, corner at the origin.
    pub extent: [f64; 2],
    #[serde(default = "d_cell_size")]
    pub cell_size: f64,
    /// Trial time limit as a multiple of the straight-line traversal time.
    #[serde(default = "d_time_limit_factor")]
    pub time_limit_factor: f64,
    /// Wall segments `[x1, y1, x2, y2]`.
    #[serde(default)]
    pub walls: Vec<[f64; 4]>,
    pub robot: RobotSection,
    pub goal: GoalSection,
    #[serde(default)]
    pub obstacles: ObstacleSection,
    #[serde(default)]
    pub sensor: SensorSection,
    #[serde(default)]
    pub planner: PlannerSection,
    #[serde(default)]
    pub sim: SimSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotSection {
    pub start: [f64; 2],
    /// Initial heading; defaults to aiming at the goal.
    pub heading_deg: Option<f64>,
    #[serde(default = "d_robot_speed")]
    pub speed: f64,
    #[serde(default = "d_robot_radius")]
    pub radius: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoalSection {
    pub position: [f64; 2],
    #[serde(default = "d_goal_radius")]
    pub radius: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstacleSection {
    /// Obstacles to spawn when no explicit list and no override are given.
    #[serde(default = "d_count")]
    pub count: usize,
    #[serde(default = "d_speed_range")]
    pub speed_range: [f64; 2],
    #[serde(default = "d_obstacle_radius")]
    pub radius: f64,
    #[serde(default = "d_clear_robot")]
    pub clear_robot: f64,
    #[serde(default = "d_clear_goal")]
    pub clear_goal: f64,
    #[serde(default = "d_clear_walls")]
    pub clear_walls: f64,
    /// Explicit spawns; used instead of random placement when present.
    #[serde(default)]
    pub fixed: Vec<FixedObstacle>,
}

impl Default for ObstacleSection {
    fn default() -> Self {
        ObstacleSection {
            count: d_count(),
            speed_range: d_speed_range(),
            radius: d_obstacle_radius(),
            clear_robot: d_clear_robot(),
            clear_goal: d_clear_goal(),
            clear_walls: d_clear_walls(),
            fixed: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixedObstacle {
    pub position: [f64; 2],
    pub heading_deg: f64,
    pub speed: f64,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SensorSection {
    pub rays: Option<usize>,
    pub range: Option<f64>,
    pub range_noise: Option<f64>,
    pub detection_noise: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct PlannerSection {
    pub sweeps_per_tick: Option<u32>,
    pub solve_tolerance: Option<f64>,
    pub warm_start: Option<bool>,
    pub band_iterations: Option<u32>,
    pub band_step: Option<f64>,
    pub tension_k: Option<f64>,
    pub warp_spacing: Option<f64>,
    pub horizon_max: Option<u32>,
    pub safety_radius: Option<f64>,
    pub wall_inflation: Option<f64>,
    pub association_gate: Option<f64>,
    pub prune_missed: Option<u32>,
    pub process_noise: Option<f64>,
    pub measurement_noise: Option<f64>,
    pub parallel_sweeps: Option<bool>,
    pub link_gap: Option<f64>,
    pub init_sweeps: Option<u32>,
    pub static_tolerance: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub dt: Option<f64>,
    pub heading_noise: Option<f64>,
    pub turn_distance: Option<f64>,
    pub turn_jitter: Option<f64>,
    pub omega_max_deg: Option<f64>,
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self, ScenarioError> {
        let sc: Scenario = toml::from_str(text)?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ScenarioError> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn extent_vec(&self) -> Vec2 {
        Vec2::new(self.extent[0], self.extent[1])
    }

    pub fn robot_start(&self) -> Vec2 {
        Vec2::new(self.robot.start[0], self.robot.start[1])
    }

    pub fn goal_pos(&self) -> Vec2 {
        Vec2::new(self.goal.position[0], self.goal.position[1])
    }

    pub fn wall_segments(&self) -> Vec<Segment> {
        self.walls
            .iter()
            .map(|w| Segment::new(Vec2::new(w[0], w[1]), Vec2::new(w[2], w[3])))
            .collect()
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let err = |m: String| Err(ScenarioError::Invalid(m));
        let (w, h) = (self.extent[0], self.extent[1]);
        if !w.is_finite() || !h.is_finite() || w <= 0.0 || h <= 0.0 {
            return err("extent must be positive".into());
        }
        if !self.cell_size.is_finite() || self.cell_size <= 0.0 {
            return err("cell_size must be positive".into());
        }
        if (w / self.cell_size) < 8.0 || (h / self.cell_size) < 8.0 {
            return err("grid would be smaller than 8x8 cells".into());
        }
        let inside = |p: Vec2, margin: f64| {
            p.x >= margin && p.y >= margin && p.x <= w - margin && p.y <= h - margin
        };
        let start = self.robot_start();
        let goal = self.goal_pos();
        if !inside(start, self.robot.radius) {
            return err(format!("robot start {start:?} outside extent"));
        }
        if !inside(goal, 0.0) {
            return err(format!("goal {goal:?} outside extent"));
        }
        if !self.robot.speed.is_finite() || self.robot.speed <= 0.0 {
            return err("robot speed must be positive".into());
        }
        if !self.goal.radius.is_finite() || self.goal.radius <= 0.0 {
            return err("goal radius must be positive".into());
        }
        if start.distance(goal) <= self.goal.radius {
            return err("robot starts inside the goal region".into());
        }
        for seg in self.wall_segments() {
            for p in [seg.a, seg.b] {
                if !inside(p, 0.0) {
                    return err(format!("wall endpoint {p:?} outside extent"));
                }
            }
            if seg.distance_to_point(start) < self.robot.radius {
                return err("robot start intersects a wall".into());
            }
            if seg.distance_to_point(goal) < self.goal.radius {
                return err("goal region intersects a wall".into());
            }
        }
        if self.obstacles.speed_range[0] <= 0.0
            || self.obstacles.speed_range[1] < self.obstacles.speed_range[0]
        {
            return err("obstacle speed range must be positive and ordered".into());
        }
        for f in &self.obstacles.fixed {
            let p = Vec2::new(f.position[0], f.position[1]);
            if !inside(p, self.obstacles.radius) {
                return err(format!("fixed obstacle {p:?} outside extent"));
            }
            if !f.speed.is_finite() || f.speed <= 0.0 {
                return err("obstacle speed must be positive".into());
            }
        }
        Ok(())
    }

    pub fn sim_config(&self) -> SimConfig {
        let mut cfg = SimConfig::default();
        let mut sensor = SensorConfig::default();
        if let Some(v) = self.sensor.rays {
            sensor.rays = v;
        }
        if let Some(v) = self.sensor.range {
            sensor.range = v;
        }
        if let Some(v) = self.sensor.range_noise {
            sensor.range_noise = v;
        }
        if let Some(v) = self.sensor.detection_noise {
            sensor.detection_noise = v;
        }
        cfg.sensor = sensor;
        if let Some(v) = self.sim.dt {
            cfg.dt = v;
        }
        if let Some(v) = self.sim.heading_noise {
            cfg.heading_noise = v;
        }
        if let Some(v) = self.sim.turn_distance {
            cfg.turn_distance = v;
        }
        if let Some(v) = self.sim.turn_jitter {
            cfg.turn_jitter = v;
        }
        if let Some(v) = self.sim.omega_max_deg {
            cfg.omega_max = v.to_radians();
        }
        cfg
    }

    pub fn planner_config(&self) -> PlannerConfig {
        let mut cfg = PlannerConfig {
            dt: self.sim.dt.unwrap_or(0.1),
            ..PlannerConfig::default()
        };
        let p = &self.planner;
        if let Some(v) = p.sweeps_per_tick {
            cfg.sweeps_per_tick = v;
        }
        if let Some(v) = p.solve_tolerance {
            cfg.solve_tolerance = v;
        }
        if let Some(v) = p.warm_start {
            cfg.warm_start = v;
        }
        if let Some(v) = p.band_iterations {
            cfg.band_iterations = v;
        }
        if let Some(v) = p.band_step {
            cfg.band_step = v;
        }
        if let Some(v) = p.tension_k {
            cfg.tension_k = v;
        }
        if let Some(v) = p.warp_spacing {
            cfg.warp_spacing = v;
        }
        if let Some(v) = p.horizon_max {
            cfg.horizon_max = v;
        }
        if let Some(v) = p.safety_radius {
            cfg.safety_radius = v;
        }
        if let Some(v) = p.wall_inflation {
            cfg.wall_inflation = v;
        }
        if let Some(v) = p.association_gate {
            cfg.association_gate = v;
        }
        if let Some(v) = p.prune_missed {
            cfg.prune_missed = v;
        }
        if let Some(v) = p.process_noise {
            cfg.process_noise = v;
        }
        if let Some(v) = p.measurement_noise {
            cfg.measurement_noise = v;
        }
        if let Some(v) = p.parallel_sweeps {
            cfg.parallel_sweeps = v;
        }
        if let Some(v) = p.link_gap {
            cfg.link_gap = v;
        }
        if let Some(v) = p.init_sweeps {
            cfg.init_sweeps = v;
        }
        if let Some(v) = p.static_tolerance {
            cfg.static_tolerance = v;
        }
        cfg
    }

    pub fn grid_spec(&self) -> GridSpec {
        let wc = (self.extent[0] / self.cell_size).round() as usize;
        let hc = (self.extent[1] / self.cell_size).round() as usize;
        GridSpec::new(wc, hc, self.cell_size, Vec2::new(0.0, 0.0))
            .expect("validated scenario produces a valid grid")
    }

    /// Initial heading: configured, or aimed straight at the goal.
    pub fn initial_heading(&self) -> f64 {
        match self.robot.heading_deg {
            Some(d) => d.to_radians(),
            None => (self.goal_pos() - self.robot_start()).angle(),
        }
    }
}

/// World plus planner for one trial. Obstacle positions and speeds come
/// from the trial seed; `obstacle_count` overrides the scenario's default
/// count (batch sweeps use this).
pub fn build_trial(
    scenario: &Scenario,
    seed: u64,
    obstacle_count: Option<usize>,
) -> Result<(WorldState, Planner), ScenarioError> {
    let walls = scenario.wall_segments();
    let robot = RobotState {
        pos: scenario.robot_start(),
        heading: scenario.initial_heading(),
        speed: scenario.robot.speed,
        radius: scenario.robot.radius,
    };
    let goal = GoalSpec {
        pos: scenario.goal_pos(),
        radius: scenario.goal.radius,
    };
    let mut world = WorldState::new(
        walls,
        scenario.extent_vec(),
        Vec::new(),
        robot,
        goal,
        scenario.sim_config(),
        seed,
    );

    let ob = &scenario.obstacles;
    if obstacle_count.is_none() && !ob.fixed.is_empty() {
        world.obstacles = ob
            .fixed
            .iter()
            .map(|f| ObstacleState {
                pos: Vec2::new(f.position[0], f.position[1]),
                heading: f.heading_deg.to_radians(),
                speed: f.speed,
                radius: ob.radius,
            })
            .collect();
    } else {
        let count = obstacle_count.unwrap_or(ob.count);
        let extent = scenario.extent_vec();
        let walls = scenario.wall_segments();
        let mut placed: Vec<ObstacleState> = Vec::with_capacity(count);
        for k in 0..count {
            let mut ok = false;
            for _attempt in 0..2000 {
                let margin = ob.clear_walls.max(ob.radius);
                let x = world.rng().gen_range(margin..extent.x - margin);
                let y = world.rng().gen_range(margin..extent.y - margin);
                let p = Vec2::new(x, y);
                if p.distance(robot.pos) < ob.clear_robot
                    || p.distance(goal.pos) < ob.clear_goal
                    || walls
                        .iter()
                        .any(|w| w.distance_to_point(p) < ob.clear_walls)
                    || placed
                        .iter()
                        .any(|o| o.pos.distance(p) < 2.0 * ob.radius + 0.1)
                {
                    continue;
                }
                let heading = world
                    .rng()
                    .gen_range(-std::f64::consts::PI..std::f64::consts::PI);
                let speed = world.rng().gen_range(ob.speed_range[0]..=ob.speed_range[1]);
                placed.push(ObstacleState {
                    pos: p,
                    heading,
                    speed,
                    radius: ob.radius,
                });
                ok = true;
                break;
            }
            if !ok {
                return Err(ScenarioError::Invalid(format!(
                    "could not place obstacle {k} of {count} (map too crowded?)"
                )));
            }
        }
        world.obstacles = placed;
    }

    let planner = Planner::new(
        scenario.grid_spec(),
        goal.pos,
        goal.radius,
        scenario.planner_config(),
    );
    Ok((world, planner))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
name = "minimal"
extent = [6.4, 6.4]
walls = [[0.2, 0.2, 6.2, 0.2], [6.2, 0.2, 6.2, 6.2], [6.2, 6.2, 0.2, 6.2], [0.2, 6.2, 0.2, 0.2]]

[robot]
start = [1.0, 1.0]

[goal]
position = [5.4, 5.4]
"#;

    #[test]
    fn parses_minimal_scenario_with_defaults() {
        let sc = Scenario::from_toml(MINIMAL).unwrap();
        assert_eq!(sc.cell_size, 0.1);
        assert_eq!(sc.robot.speed, 0.4);
        assert_eq!(sc.obstacles.count, 1);
        assert_eq!(sc.grid_spec().width_cells(), 64);
        // Default heading aims at the goal.
        assert!((sc.initial_heading() - std::f64::consts::FRAC_PI_4).abs() < 1e-9);
    }

    #[test]
    fn rejects_start_outside_extent() {
        let bad = MINIMAL.replace("start = [1.0, 1.0]", "start = [9.0, 1.0]");
        assert!(matches!(
            Scenario::from_toml(&bad),
            Err(ScenarioError::Invalid(_))
        ));
    }

    #[test]
    fn rejects_goal_inside_wall() {
        let bad = MINIMAL.replace("position = [5.4, 5.4]", "position = [6.2, 3.0]");
        assert!(matches!(
            Scenario::from_toml(&bad),
            Err(ScenarioError::Invalid(_))
        ));
    }

    #[test]
    fn rejects_unknown_fields() {
        let bad = format!("{MINIMAL}\nbogus_key = 3\n");
        assert!(matches!(
            Scenario::from_toml(&bad),
            Err(ScenarioError::Parse(_))
        ));
    }

    #[test]
    fn seeded_obstacle_placement_is_deterministic() {
        let sc = Scenario::from_toml(MINIMAL).unwrap();
        let (w1, _) = build_trial(&sc, 42, Some(3)).unwrap();
        let (w2, _) = build_trial(&sc, 42, Some(3)).unwrap();
        let (w3, _) = build_trial(&sc, 43, Some(3)).unwrap();
        assert_eq!(w1.obstacles.len(), 3);
        for (a, b) in w1.obstacles.iter().zip(&w2.obstacles) {
            assert_eq!(a.pos, b.pos);
            assert_eq!(a.heading, b.heading);
            assert_eq!(a.speed, b.speed);
        }
        assert!(w1
            .obstacles
            .iter()
            .zip(&w3.obstacles)
            .any(|(a, b)| a.pos != b.pos));
    }

    #[test]
    fn placement_respects_clearances() {
        let sc = Scenario::from_toml(MINIMAL).unwrap();
        let (w, _) = build_trial(&sc, 7, Some(4)).unwrap();
        for o in &w.obstacles {
            assert!(o.pos.distance(w.robot.pos) >= sc.obstacles.clear_robot);
            assert!(o.pos.distance(w.goal.pos) >= sc.obstacles.clear_goal);
            assert!(o.speed >= 0.2 && o.speed <= 0.5);
        }
    }

    #[test]
    fn fixed_obstacles_used_verbatim() {
        let with_fixed = format!(
            "{MINIMAL}\n[[obstacles.fixed]]\nposition = [3.0, 3.0]\nheading_deg = 90.0\nspeed = 0.3\n"
        );
        let sc = Scenario::from_toml(&with_fixed).unwrap();
        let (w, _) = build_trial(&sc, 1, None).unwrap();
        assert_eq!(w.obstacles.len(), 1);
        assert_eq!(w.obstacles[0].pos, Vec2::new(3.0, 3.0));
        // A count override switches to randomized placement.
        let (w2, _) = build_trial(&sc, 1, Some(2)).unwrap();
        assert_eq!(w2.obstacles.len(), 2);
    }
}
