//! Deterministic discrete-time 2D world: wall geometry, wandering
//! constant-speed obstacles, noisy range/position sensing, constant-speed
//! robot kinematics, and trial termination checks.
//!
//! All randomness flows through one seeded `ChaCha8` stream owned by the
//! world, and every update walks entities in index order, so a
//! `(scenario, seed)` pair replays to a bit-identical trajectory on any
//! platform or worker count.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::geom::{ray_segment_hit, segments_intersect, Segment, Vec2};
use crate::tracking::Detection;

/// Wandering obstacle: constant speed, heading changes only near walls and
/// other obstacles (plus small per-tick jitter).
#[derive(Debug, Clone, Copy)]
pub struct ObstacleState {
    pub pos: Vec2<f64>,
    pub heading: f64,
    pub speed: f64,
    pub radius: f64,
}

/// Constant-speed vehicle with bounded turn rate.
#[derive(Debug, Clone, Copy)]
pub struct RobotState {
    pub pos: Vec2<f64>,
    pub heading: f64,
    pub speed: f64,
    pub radius: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct GoalSpec {
    pub pos: Vec2<f64>,
    pub radius: f64,
}

/// Sensing parameters for the laser fan and the obstacle localizer.
#[derive(Debug, Clone, Copy)]
pub struct SensorConfig {
    pub rays: usize,
    pub range: f64,
    /// Radial noise on laser returns, meters (sigma).
    pub range_noise: f64,
    /// Position noise on obstacle detections, meters (sigma).
    pub detection_noise: f64,
}

impl Default for SensorConfig {
    fn default() -> Self {
        SensorConfig {
            rays: 360,
            range: 8.0,
            range_noise: 0.02,
            detection_noise: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SimConfig {
    /// Simulation tick, seconds.
    pub dt: f64,
    /// Per-tick obstacle heading jitter in open space (sigma, radians).
    pub heading_noise: f64,
    /// Look-ahead distance that triggers an avoidance turn.
    pub turn_distance: f64,
    /// Uniform jitter added to avoidance turns, radians (half-width).
    pub turn_jitter: f64,
    /// Robot turn-rate limit, rad/s.
    pub omega_max: f64,
    pub sensor: SensorConfig,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dt: 0.1,
            heading_noise: 0.02,
            turn_distance: 0.5,
            turn_jitter: 0.26,
            omega_max: std::f64::consts::FRAC_PI_2,
            sensor: SensorConfig::default(),
        }
    }
}

/// One tick's worth of sensing: laser returns on walls plus one position
/// detection per visible obstacle. Obstacles behind walls are occluded.
#[derive(Debug, Clone)]
pub struct SensorFrame {
    pub static_hits: Vec<Vec2<f64>>,
    pub detections: Vec<Detection<f64>>,
    pub tick: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrialStatus {
    Running,
    Success,
    Collision,
}

/// Complete mutable world for one trial.
#[derive(Debug, Clone)]
pub struct WorldState {
    pub walls: Vec<Segment<f64>>,
    /// World rectangle `[0, extent.x] x [0, extent.y]`.
    pub extent: Vec2<f64>,
    pub obstacles: Vec<ObstacleState>,
    pub robot: RobotState,
    pub goal: GoalSpec,
    pub tick: u64,
    pub seed: u64,
    pub config: SimConfig,
    rng: ChaCha8Rng,
}

impl WorldState {
    pub fn new(
        walls: Vec<Segment<f64>>,
        extent: Vec2<f64>,
        obstacles: Vec<ObstacleState>,
        robot: RobotState,
        goal: GoalSpec,
        config: SimConfig,
        seed: u64,
    ) -> Self {
        WorldState {
            walls,
            extent,
            obstacles,
            robot,
            goal,
            tick: 0,
            seed,
            config,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Seeded stream for scenario-level draws (obstacle placement) that
    /// must come from the same source as the trial's dynamics.
    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn sense(&mut self) -> SensorFrame {
        sense(
            &self.walls,
            &self.obstacles,
            &self.robot,
            &self.config.sensor,
            self.tick,
            &mut self.rng,
        )
    }

    /// Advance the robot one tick toward `target` (`None` keeps the
    /// current heading, since the vehicle never stops).
    pub fn step_robot(&mut self, target: Option<Vec2<f64>>) {
        let aim = target.unwrap_or_else(|| self.robot.pos + Vec2::from_angle(self.robot.heading));
        self.robot = step_robot(&self.robot, aim, self.config.omega_max, self.config.dt);
    }

    /// Advance every obstacle one tick, in index order.
    pub fn step_obstacles(&mut self) {
        for i in 0..self.obstacles.len() {
            let others: Vec<(Vec2<f64>, f64)> = self
                .obstacles
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, o)| (o.pos, o.radius))
                .collect();
            self.obstacles[i] = step_obstacle(
                &self.obstacles[i],
                &self.walls,
                &others,
                self.extent,
                &self.config,
                &mut self.rng,
            );
        }
        self.tick += 1;
    }

    pub fn status(&self) -> TrialStatus {
        check_trial_status(self)
    }
}

fn wrap_angle(a: f64) -> f64 {
    let mut a = a % std::f64::consts::TAU;
    if a > std::f64::consts::PI {
        a -= std::f64::consts::TAU;
    } else if a < -std::f64::consts::PI {
        a += std::f64::consts::TAU;
    }
    a
}

fn nearest_wall_hit(
    origin: Vec2<f64>,
    dir: Vec2<f64>,
    walls: &[Segment<f64>],
) -> Option<(f64, usize)> {
    let mut best: Option<(f64, usize)> = None;
    for (i, w) in walls.iter().enumerate() {
        if let Some(d) = ray_segment_hit(origin, dir, *w) {
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, i));
            }
        }
    }
    best
}

fn reflect(dir: Vec2<f64>, mut normal: Vec2<f64>) -> Vec2<f64> {
    if dir.dot(normal) > 0.0 {
        normal = -normal;
    }
    dir - normal.scale(2.0 * dir.dot(normal))
}

/// Advance one obstacle by `speed * dt` along its heading. Near a wall or
/// another obstacle the heading reflects away (plus uniform jitter); in
/// open space it picks up small Gaussian jitter. Motion never tunnels
/// through a wall and never leaves the extent.
pub fn step_obstacle(
    ob: &ObstacleState,
    walls: &[Segment<f64>],
    others: &[(Vec2<f64>, f64)],
    extent: Vec2<f64>,
    cfg: &SimConfig,
    rng: &mut ChaCha8Rng,
) -> ObstacleState {
    let mut next = *ob;
    let dir = Vec2::from_angle(next.heading);

    // Wall ahead?
    let wall_ahead = nearest_wall_hit(next.pos, dir, walls).filter(|&(d, _)| d < cfg.turn_distance);
    // Another obstacle ahead?
    let other_ahead = others
        .iter()
        .filter(|(p, r)| {
            let to = *p - next.pos;
            to.dot(dir) > 0.0 && to.norm() - r < cfg.turn_distance
        })
        .min_by(|a, b| {
            let da = (a.0 - next.pos).norm_sq();
            let db = (b.0 - next.pos).norm_sq();
            da.partial_cmp(&db).unwrap()
        })
        .copied();

    if let Some((_, wi)) = wall_ahead {
        let w = walls[wi];
        let tangent = (w.b - w.a).normalized_or_zero();
        let normal = Vec2::new(-tangent.y, tangent.x);
        let out = reflect(dir, normal);
        let jitter = rng.gen_range(-cfg.turn_jitter..=cfg.turn_jitter);
        next.heading = wrap_angle(out.angle() + jitter);
    } else if let Some((p, _)) = other_ahead {
        let away = (next.pos - p).normalized_or_zero();
        let out = reflect(dir, away);
        let jitter = rng.gen_range(-cfg.turn_jitter..=cfg.turn_jitter);
        next.heading = wrap_angle(out.angle() + jitter);
    } else if cfg.heading_noise > 0.0 {
        let noise = Normal::new(0.0, cfg.heading_noise).unwrap();
        next.heading = wrap_angle(next.heading + noise.sample(rng));
    }

    let step = Vec2::from_angle(next.heading).scale(next.speed * cfg.dt);
    let candidate = next.pos + step;
    // Tunneling guard: cancel moves whose swept segment crosses a wall.
    let crosses = walls
        .iter()
        .any(|w| segments_intersect(next.pos, candidate, w.a, w.b));
    if !crosses {
        next.pos = candidate;
    }
    next.pos.x = next.pos.x.clamp(next.radius, extent.x - next.radius);
    next.pos.y = next.pos.y.clamp(next.radius, extent.y - next.radius);
    next
}

/// Cast a 360-degree laser fan against the walls and localize visible
/// obstacles. Wall returns get radial Gaussian noise; obstacle detections
/// get isotropic Gaussian position noise and are suppressed when a wall
/// blocks the line of sight.
pub fn sense(
    walls: &[Segment<f64>],
    obstacles: &[ObstacleState],
    robot: &RobotState,
    cfg: &SensorConfig,
    tick: u64,
    rng: &mut ChaCha8Rng,
) -> SensorFrame {
    let mut static_hits = Vec::new();
    for k in 0..cfg.rays {
        let angle = robot.heading + std::f64::consts::TAU * k as f64 / cfg.rays as f64;
        let dir = Vec2::from_angle(angle);
        if let Some((d, _)) = nearest_wall_hit(robot.pos, dir, walls) {
            if d <= cfg.range {
                let d = if cfg.range_noise > 0.0 {
                    let noise = Normal::new(0.0, cfg.range_noise).unwrap();
                    (d + noise.sample(rng)).clamp(0.0, cfg.range)
                } else {
                    d
                };
                static_hits.push(robot.pos + dir.scale(d));
            }
        }
    }
    let mut detections = Vec::new();
    for ob in obstacles {
        if robot.pos.distance(ob.pos) > cfg.range {
            continue;
        }
        let occluded = walls
            .iter()
            .any(|w| segments_intersect(robot.pos, ob.pos, w.a, w.b));
        if occluded {
            continue;
        }
        let pos = if cfg.detection_noise > 0.0 {
            let noise = Normal::new(0.0, cfg.detection_noise).unwrap();
            ob.pos + Vec2::new(noise.sample(rng), noise.sample(rng))
        } else {
            ob.pos
        };
        detections.push(Detection { pos, tick });
    }
    SensorFrame {
        static_hits,
        detections,
        tick,
    }
}

/// Turn toward the waypoint, limited to `omega_max * dt` per tick, then
/// advance `speed * dt` along the new heading. The vehicle never stops; a
/// waypoint at the current position keeps the heading unchanged.
pub fn step_robot(robot: &RobotState, waypoint: Vec2<f64>, omega_max: f64, dt: f64) -> RobotState {
    let mut next = *robot;
    let to = waypoint - robot.pos;
    if to.norm_sq() > 0.0 {
        let desired = to.angle();
        let mut delta = wrap_angle(desired - robot.heading);
        let limit = omega_max * dt;
        delta = delta.clamp(-limit, limit);
        next.heading = wrap_angle(robot.heading + delta);
    }
    next.pos = next.pos + Vec2::from_angle(next.heading).scale(next.speed * dt);
    next
}

/// Success as soon as the robot center is within the goal radius;
/// collision when it overlaps an obstacle disk or a wall.
pub fn check_trial_status(world: &WorldState) -> TrialStatus {
    let r = &world.robot;
    if r.pos.distance(world.goal.pos) <= world.goal.radius {
        return TrialStatus::Success;
    }
    for ob in &world.obstacles {
        if r.pos.distance(ob.pos) < r.radius + ob.radius {
            return TrialStatus::Collision;
        }
    }
    for w in &world.walls {
        if w.distance_to_point(r.pos) < r.radius {
            return TrialStatus::Collision;
        }
    }
    TrialStatus::Running
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quiet_config() -> SimConfig {
        SimConfig {
            heading_noise: 0.0,
            sensor: SensorConfig {
                range_noise: 0.0,
                detection_noise: 0.0,
                ..SensorConfig::default()
            },
            ..SimConfig::default()
        }
    }

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn box_walls(w: f64, h: f64) -> Vec<Segment<f64>> {
        vec![
            Segment::new(Vec2::new(0.0, 0.0), Vec2::new(w, 0.0)),
            Segment::new(Vec2::new(w, 0.0), Vec2::new(w, h)),
            Segment::new(Vec2::new(w, h), Vec2::new(0.0, h)),
            Segment::new(Vec2::new(0.0, h), Vec2::new(0.0, 0.0)),
        ]
    }

    #[test]
    fn obstacle_moves_straight_without_noise() {
        let ob = ObstacleState {
            pos: Vec2::new(5.0, 5.0),
            heading: 0.0,
            speed: 0.3,
            radius: 0.25,
        };
        let cfg = quiet_config();
        let next = step_obstacle(&ob, &[], &[], Vec2::new(10.0, 10.0), &cfg, &mut rng(1));
        assert!((next.pos.x - 5.03).abs() < 1e-12);
        assert_eq!(next.pos.y, 5.0);
        assert_eq!(next.heading, 0.0);
        assert_eq!(next.speed, 0.3);
    }

    #[test]
    fn obstacle_turns_away_from_wall_ahead() {
        let walls = vec![Segment::new(Vec2::new(5.4, 4.0), Vec2::new(5.4, 6.0))];
        let ob = ObstacleState {
            pos: Vec2::new(5.0, 5.0),
            heading: 0.0,
            speed: 0.3,
            radius: 0.25,
        };
        let cfg = quiet_config();
        let next = step_obstacle(&ob, &walls, &[], Vec2::new(10.0, 10.0), &cfg, &mut rng(2));
        let turn = wrap_angle(next.heading - ob.heading).abs();
        assert!(
            turn >= std::f64::consts::FRAC_PI_2 - cfg.turn_jitter,
            "turned only {turn} rad"
        );
    }

    #[test]
    fn obstacle_trajectory_is_seed_deterministic() {
        let walls = box_walls(10.0, 10.0);
        let cfg = SimConfig::default();
        let start = ObstacleState {
            pos: Vec2::new(5.0, 5.0),
            heading: 1.1,
            speed: 0.4,
            radius: 0.25,
        };
        let run = |seed: u64| {
            let mut ob = start;
            let mut r = rng(seed);
            let mut trace = Vec::new();
            for _ in 0..500 {
                ob = step_obstacle(&ob, &walls, &[], Vec2::new(10.0, 10.0), &cfg, &mut r);
                trace.push((ob.pos.x.to_bits(), ob.pos.y.to_bits()));
            }
            trace
        };
        assert_eq!(run(77), run(77));
        assert_ne!(run(77), run(78));
    }

    #[test]
    fn obstacle_never_leaves_extent() {
        let walls = box_walls(6.0, 6.0);
        let cfg = SimConfig::default();
        let mut ob = ObstacleState {
            pos: Vec2::new(3.0, 3.0),
            heading: 0.3,
            speed: 0.5,
            radius: 0.25,
        };
        let mut r = rng(9);
        for _ in 0..5000 {
            ob = step_obstacle(&ob, &walls, &[], Vec2::new(6.0, 6.0), &cfg, &mut r);
            assert!(ob.pos.x >= 0.25 && ob.pos.x <= 5.75);
            assert!(ob.pos.y >= 0.25 && ob.pos.y <= 5.75);
        }
    }

    #[test]
    fn sense_empty_world() {
        let robot = RobotState {
            pos: Vec2::new(5.0, 5.0),
            heading: 0.0,
            speed: 0.4,
            radius: 0.25,
        };
        let frame = sense(&[], &[], &robot, &SensorConfig::default(), 3, &mut rng(1));
        assert!(frame.static_hits.is_empty());
        assert!(frame.detections.is_empty());
        assert_eq!(frame.tick, 3);
    }

    #[test]
    fn sense_wall_two_meters_ahead_exact() {
        let robot = RobotState {
            pos: Vec2::new(1.0, 1.0),
            heading: 0.0,
            speed: 0.4,
            radius: 0.25,
        };
        let walls = vec![Segment::new(Vec2::new(3.0, 0.0), Vec2::new(3.0, 2.0))];
        let cfg = SensorConfig {
            range_noise: 0.0,
            detection_noise: 0.0,
            ..SensorConfig::default()
        };
        let frame = sense(&walls, &[], &robot, &cfg, 0, &mut rng(1));
        // The forward ray is the first one (angles start at the heading).
        let hit = frame.static_hits[0];
        assert!((hit.distance(robot.pos) - 2.0).abs() < 1e-9);
        assert!((hit.x - 3.0).abs() < 1e-9);
    }

    #[test]
    fn sense_occluded_obstacle_suppressed() {
        let robot = RobotState {
            pos: Vec2::new(1.0, 1.0),
            heading: 0.0,
            speed: 0.4,
            radius: 0.25,
        };
        let walls = vec![Segment::new(Vec2::new(2.0, 0.0), Vec2::new(2.0, 2.0))];
        let visible = ObstacleState {
            pos: Vec2::new(1.0, 2.5),
            heading: 0.0,
            speed: 0.3,
            radius: 0.25,
        };
        let hidden = ObstacleState {
            pos: Vec2::new(3.0, 1.0),
            heading: 0.0,
            speed: 0.3,
            radius: 0.25,
        };
        let cfg = SensorConfig {
            range_noise: 0.0,
            detection_noise: 0.0,
            ..SensorConfig::default()
        };
        let frame = sense(&walls, &[visible, hidden], &robot, &cfg, 0, &mut rng(1));
        assert_eq!(frame.detections.len(), 1);
        assert_eq!(frame.detections[0].pos, visible.pos);
    }

    #[test]
    fn sense_zero_noise_matches_analytic_intersections() {
        // Independent oracle: solve the ray/segment intersection by
        // substituting the parametric ray into the segment's line equation.
        let mut r = rng(12);
        for _ in 0..100 {
            let robot = RobotState {
                pos: Vec2::new(r.gen_range(2.0..8.0), r.gen_range(2.0..8.0)),
                heading: r.gen_range(-3.0..3.0),
                speed: 0.4,
                radius: 0.25,
            };
            let walls: Vec<Segment<f64>> = (0..5)
                .map(|_| {
                    Segment::new(
                        Vec2::new(r.gen_range(0.0..10.0), r.gen_range(0.0..10.0)),
                        Vec2::new(r.gen_range(0.0..10.0), r.gen_range(0.0..10.0)),
                    )
                })
                .collect();
            let cfg = SensorConfig {
                rays: 36,
                range_noise: 0.0,
                detection_noise: 0.0,
                ..SensorConfig::default()
            };
            let frame = sense(&walls, &[], &robot, &cfg, 0, &mut rng(1));
            for hit in &frame.static_hits {
                // Every reported hit lies on some wall segment and within range.
                let on_wall = walls.iter().any(|w| w.distance_to_point(*hit) < 1e-6);
                assert!(on_wall, "hit {hit:?} not on any wall");
                assert!(hit.distance(robot.pos) <= cfg.range + 1e-9);
                // And no wall is strictly closer along that ray direction.
                let dir = (*hit - robot.pos).normalized_or_zero();
                let d = hit.distance(robot.pos);
                for w in &walls {
                    if let Some(t) = ray_segment_hit(robot.pos, dir, *w) {
                        assert!(t >= d - 1e-6, "closer wall at {t} vs reported {d}");
                    }
                }
            }
        }
    }

    #[test]
    fn robot_straight_ahead() {
        let robot = RobotState {
            pos: Vec2::new(1.0, 1.0),
            heading: 0.0,
            speed: 0.4,
            radius: 0.25,
        };
        let next = step_robot(
            &robot,
            Vec2::new(5.0, 1.0),
            std::f64::consts::FRAC_PI_2,
            0.1,
        );
        assert_eq!(next.heading, 0.0);
        assert!((next.pos.x - 1.04).abs() < 1e-12);
        assert_eq!(next.pos.y, 1.0);
    }

    #[test]
    fn robot_turn_saturates_at_omega_max() {
        let robot = RobotState {
            pos: Vec2::new(1.0, 1.0),
            heading: 0.0,
            speed: 0.4,
            radius: 0.25,
        };
        // Waypoint directly behind; 90 deg/s * 0.1 s = 9 degrees this tick.
        let next = step_robot(
            &robot,
            Vec2::new(0.0, 1.0),
            std::f64::consts::FRAC_PI_2,
            0.1,
        );
        let turned = wrap_angle(next.heading - robot.heading).abs();
        assert!((turned.to_degrees() - 9.0).abs() < 1e-9);
    }

    #[test]
    fn robot_zero_vector_waypoint_keeps_heading_and_moves() {
        let robot = RobotState {
            pos: Vec2::new(1.0, 1.0),
            heading: 0.7,
            speed: 0.4,
            radius: 0.25,
        };
        let next = step_robot(&robot, robot.pos, std::f64::consts::FRAC_PI_2, 0.1);
        assert_eq!(next.heading, 0.7);
        assert!((next.pos.distance(robot.pos) - 0.04).abs() < 1e-12);
    }

    #[test]
    fn robot_displacement_is_exactly_speed_dt() {
        let mut robot = RobotState {
            pos: Vec2::new(2.0, 2.0),
            heading: 0.3,
            speed: 0.4,
            radius: 0.25,
        };
        let mut r = rng(5);
        for _ in 0..200 {
            let wp = Vec2::new(r.gen_range(0.0..10.0), r.gen_range(0.0..10.0));
            let next = step_robot(&robot, wp, std::f64::consts::FRAC_PI_2, 0.1);
            assert!((next.pos.distance(robot.pos) - 0.04).abs() < 1e-12);
            robot = next;
        }
    }

    fn world_at(robot_pos: Vec2<f64>, obstacles: Vec<ObstacleState>) -> WorldState {
        WorldState::new(
            box_walls(10.0, 10.0),
            Vec2::new(10.0, 10.0),
            obstacles,
            RobotState {
                pos: robot_pos,
                heading: 0.0,
                speed: 0.4,
                radius: 0.25,
            },
            GoalSpec {
                pos: Vec2::new(8.0, 8.0),
                radius: 0.4,
            },
            SimConfig::default(),
            1,
        )
    }

    #[test]
    fn status_success_at_goal() {
        let w = world_at(Vec2::new(8.0, 8.0), vec![]);
        assert_eq!(w.status(), TrialStatus::Success);
    }

    #[test]
    fn status_collision_on_contact() {
        let ob = ObstacleState {
            pos: Vec2::new(5.0, 5.0),
            heading: 0.0,
            speed: 0.3,
            radius: 0.25,
        };
        // Distance 0.49 < 0.25 + 0.25.
        let w = world_at(Vec2::new(5.0, 5.49), vec![ob]);
        assert_eq!(w.status(), TrialStatus::Collision);
    }

    #[test]
    fn status_running_otherwise() {
        let w = world_at(Vec2::new(5.0, 5.0), vec![]);
        assert_eq!(w.status(), TrialStatus::Running);
    }
}
