//! Per-tick planning pipeline: fuse sensed walls into the grid, track and
//! predict obstacles, stamp time-warped footprints, relax the harmonic
//! field, extract and rubber-band the path, and emit the next waypoint.
//!
//! When no descent path exists the planner reports `Blocked` with a local
//! drift direction; the caller keeps the vehicle moving (previous
//! waypoint, drift, or current heading) and replans next tick.

use std::collections::HashSet;

use crate::band::{relax_path, BandParams, PathPolyline};
use crate::field::{extract_path, IndexMatrix, PotentialField};
use crate::geom::Vec2;
use crate::grid::{CellClass, CellIndex, GridSpec};
use crate::sim::{RobotState, SensorFrame};
use crate::tracking::{
    associate, predict, spawn_and_prune, update, KalmanModel, ObstacleTrack, TrackPolicy,
};
use crate::warp::{assign, mark_future_obstacle, WarpGeometry};

/// Tunables for one planner instance. Defaults follow the production
/// configuration: 100 relaxation sweeps per tick, 50 band iterations,
/// per-tick field reset.
#[derive(Debug, Clone, Copy)]
pub struct PlannerConfig {
    /// Relaxation sweeps per planning tick.
    pub sweeps_per_tick: u32,
    /// Early-exit residual for the solver; 0 disables early exit.
    pub solve_tolerance: f64,
    /// Keep the previous tick's free-space potentials instead of
    /// re-seeding at 0.5. Lets goal influence accumulate across ticks on
    /// maps larger than one tick's propagation radius.
    pub warm_start: bool,
    /// Rubber band iterations per tick.
    pub band_iterations: u32,
    /// Rubber band candidate step, cells.
    pub band_step: f64,
    /// Rubber band spring constant.
    pub tension_k: f64,
    /// Major-axis length of one warp band, meters.
    pub warp_spacing: f64,
    /// Cap on Kalman prediction horizons, steps.
    pub horizon_max: u32,
    /// Hard dilation radius around predicted obstacle positions, meters.
    pub safety_radius: f64,
    /// Dilation radius around sensed wall cells, meters (clearance the
    /// vehicle body needs; collision is checked against its center).
    pub wall_inflation: f64,
    /// Association gate, meters.
    pub association_gate: f64,
    /// Tracks are dropped after this many consecutive missed ticks.
    pub prune_missed: u32,
    /// Process-noise scale for the constant-velocity model.
    pub process_noise: f64,
    /// Measurement noise sigma, meters.
    pub measurement_noise: f64,
    /// Seconds per tick.
    pub dt: f64,
    /// Run relaxation color passes on the rayon pool.
    pub parallel_sweeps: bool,
    /// Consecutive laser hits closer than this are joined into wall
    /// segments before rasterization, keeping sensed walls watertight.
    pub link_gap: f64,
    /// Early-exit residual for the static base field's maintenance solve
    /// under warm start. The base barely changes between ticks once
    /// converged, so most ticks finish in a handful of sweeps. The
    /// planning field's own per-tick budget is not affected.
    pub static_tolerance: f64,
    /// One-off relaxation sweeps at construction, before the first tick.
    /// This is the map/potential initialization phase: it grows the goal
    /// basin until gradients are resolvable everywhere, so the first
    /// planning ticks are not spuriously blocked far from the goal.
    /// Pointless without `warm_start` (a per-tick reset discards it).
    pub init_sweeps: u32,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            sweeps_per_tick: 100,
            solve_tolerance: 0.0,
            warm_start: false,
            band_iterations: 50,
            band_step: 0.25,
            tension_k: 1.0,
            warp_spacing: 1.0,
            horizon_max: 20,
            safety_radius: 0.7,
            wall_inflation: 0.25,
            association_gate: 1.0,
            prune_missed: 10,
            process_noise: 1e-3,
            measurement_noise: 0.05,
            dt: 0.1,
            parallel_sweeps: false,
            link_gap: 0.25,
            static_tolerance: 1e-9,
            init_sweeps: 0,
        }
    }
}

/// Output of one planning tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PlanStep {
    /// Next waypoint in world coordinates, at least one cell from the robot.
    Waypoint(Vec2<f64>),
    /// No descent path to the goal this tick. The vehicle must keep
    /// moving; `drift` points at the lowest-potential free neighbor of
    /// its cell, which steers away from walls (they sit at the potential
    /// maximum) until replanning succeeds.
    Blocked { drift: Option<Vec2<f64>> },
}

/// Predicted footprint stamped this tick (center and radius, for
/// rendering and diagnostics).
#[derive(Debug, Clone, Copy)]
pub struct Footprint {
    pub center: Vec2<f64>,
    pub radius: f64,
    pub track_id: u32,
}

pub struct Planner {
    spec: GridSpec<f64>,
    cfg: PlannerConfig,
    model: KalmanModel<f64>,
    track_policy: TrackPolicy<f64>,
    /// Planning field for the current tick (static base plus fresh
    /// dynamic footprints).
    field: PotentialField<f64>,
    /// Warm-maintained base holding only sources that never vacate
    /// (goal and accumulated walls); only used when `warm_start` is set.
    static_field: PotentialField<f64>,
    goal_cells: Vec<CellIndex>,
    static_map: HashSet<CellIndex>,
    static_inflated: HashSet<CellIndex>,
    inflate_offsets: Vec<(i32, i32)>,
    tracks: Vec<ObstacleTrack<f64>>,
    next_track_id: u32,
    current_path: Option<PathPolyline<f64>>,
    footprints: Vec<Footprint>,
    goal_clipped: bool,
    tick: u64,
}

fn disk_offsets(radius_m: f64, cell_size: f64) -> Vec<(i32, i32)> {
    let r_cells = radius_m / cell_size;
    let r = r_cells.ceil() as i32;
    let mut out = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            if ((dx * dx + dy * dy) as f64).sqrt() <= r_cells {
                out.push((dx, dy));
            }
        }
    }
    out
}

impl Planner {
    pub fn new(
        spec: GridSpec<f64>,
        goal_pos: Vec2<f64>,
        goal_radius: f64,
        cfg: PlannerConfig,
    ) -> Self {
        let goal_cell = spec
            .world_to_cell(goal_pos)
            .expect("goal position inside the grid");
        let mut goal_cells = Vec::new();
        for (dx, dy) in disk_offsets(goal_radius, spec.cell_size()) {
            let x = goal_cell.x as i32 + dx;
            let y = goal_cell.y as i32 + dy;
            if x >= 0 && y >= 0 {
                let c = CellIndex::new(x as usize, y as usize);
                if spec.in_bounds(c) && spec.cell_center(c).distance(goal_pos) <= goal_radius {
                    goal_cells.push(c);
                }
            }
        }
        if goal_cells.is_empty() {
            goal_cells.push(goal_cell);
        }
        let mut static_field = PotentialField::initialize(spec, goal_cells.iter().copied(), [])
            .expect("goal cells are in bounds and disjoint");
        static_field.set_parallel(cfg.parallel_sweeps);
        if cfg.init_sweeps > 0 {
            static_field.solve(cfg.init_sweeps, 0.0);
        }
        let field = static_field.clone();
        let model =
            KalmanModel::constant_velocity(cfg.dt, cfg.process_noise, cfg.measurement_noise);
        let track_policy = TrackPolicy {
            prune_missed: cfg.prune_missed,
            ..TrackPolicy::default()
        };
        Planner {
            spec,
            cfg,
            model,
            track_policy,
            field,
            static_field,
            goal_cells,
            static_map: HashSet::new(),
            static_inflated: HashSet::new(),
            inflate_offsets: disk_offsets(cfg.wall_inflation, spec.cell_size()),
            tracks: Vec::new(),
            next_track_id: 0,
            current_path: None,
            footprints: Vec::new(),
            goal_clipped: false,
            tick: 0,
        }
    }

    pub fn spec(&self) -> &GridSpec<f64> {
        &self.spec
    }

    pub fn config(&self) -> &PlannerConfig {
        &self.cfg
    }

    pub fn field(&self) -> &PotentialField<f64> {
        &self.field
    }

    pub fn tracks(&self) -> &[ObstacleTrack<f64>] {
        &self.tracks
    }

    pub fn static_map(&self) -> &HashSet<CellIndex> {
        &self.static_map
    }

    /// Path planned on the most recent successful tick.
    pub fn planned_path(&self) -> Option<&PathPolyline<f64>> {
        self.current_path.as_ref()
    }

    pub fn footprints(&self) -> &[Footprint] {
        &self.footprints
    }

    /// A footprint touched the goal region this tick and was clipped.
    pub fn goal_clipped(&self) -> bool {
        self.goal_clipped
    }

    fn fuse_static_hits(&mut self, frame: &SensorFrame) {
        let add_cell = |c: CellIndex,
                        static_map: &mut HashSet<CellIndex>,
                        inflated: &mut HashSet<CellIndex>| {
            if static_map.insert(c) {
                for &(dx, dy) in &self.inflate_offsets {
                    let x = c.x as i32 + dx;
                    let y = c.y as i32 + dy;
                    if x >= 0 && y >= 0 {
                        let n = CellIndex::new(x as usize, y as usize);
                        if self.spec.in_bounds(n) {
                            inflated.insert(n);
                        }
                    }
                }
            }
        };
        let mut static_map = std::mem::take(&mut self.static_map);
        let mut inflated = std::mem::take(&mut self.static_inflated);
        for hit in &frame.static_hits {
            if let Ok(c) = self.spec.world_to_cell(*hit) {
                add_cell(c, &mut static_map, &mut inflated);
            }
        }
        // Join consecutive returns on the same surface so the wall is a
        // closed line of cells rather than a dotted one.
        for pair in frame.static_hits.windows(2) {
            if pair[0].distance(pair[1]) < self.cfg.link_gap {
                if let Ok(cells) = self.spec.rasterize_segment(pair[0], pair[1]) {
                    for c in cells {
                        add_cell(c, &mut static_map, &mut inflated);
                    }
                }
            }
        }
        self.static_map = static_map;
        self.static_inflated = inflated;
    }

    fn update_tracks(&mut self, frame: &SensorFrame) {
        for t in &mut self.tracks {
            let (x, p) = predict(t, &self.model, 1);
            t.state = x;
            t.cov = p;
            t.age += 1;
        }
        let assoc = associate(
            &mut self.tracks,
            &frame.detections,
            self.cfg.association_gate,
        );
        for &(ti, di) in &assoc.pairs {
            if let Ok(refreshed) = update(&self.tracks[ti], &self.model, &frame.detections[di]) {
                self.tracks[ti] = refreshed;
            }
        }
        let unmatched: Vec<_> = assoc
            .unmatched_detections
            .iter()
            .map(|&i| frame.detections[i])
            .collect();
        spawn_and_prune(
            &mut self.tracks,
            &unmatched,
            &self.track_policy,
            &mut self.next_track_id,
        );
    }

    fn rebuild_field(&mut self, robot: &RobotState) {
        if self.cfg.warm_start {
            // Maintain the static base (its sources only ever grow, so
            // warm reuse accumulates convergence without artifacts), then
            // restamp this tick's dynamic marks onto a fresh copy: the
            // grid is cleared of the previous tick's predicted potentials.
            self.static_field.begin_tick(true);
            for c in self.goal_cells.clone() {
                self.static_field.set_goal(c);
            }
            for &c in &self.static_inflated {
                self.static_field.set_obstacle(c);
            }
            self.static_field.set_parallel(self.cfg.parallel_sweeps);
            self.static_field
                .solve(self.cfg.sweeps_per_tick, self.cfg.static_tolerance);
            self.field.clone_from(&self.static_field);
        } else {
            self.field.begin_tick(false);
            for c in self.goal_cells.clone() {
                self.field.set_goal(c);
            }
            for &c in &self.static_inflated {
                self.field.set_obstacle(c);
            }
        }
        self.footprints.clear();
        self.goal_clipped = false;
        let geom = WarpGeometry::new(
            robot.pos,
            robot.heading,
            self.cfg.warp_spacing,
            4.0 * self.spec.diagonal(),
        );
        for t in &self.tracks {
            // Fresh tracks carry a zero-velocity guess at the measured
            // position; stamping them would block the obstacle's current
            // cell, which the prediction scheme exists to avoid.
            if t.age < 2 {
                continue;
            }
            let a = match assign(
                &geom,
                t.id,
                t.position(),
                robot.speed,
                t.speed(),
                self.cfg.horizon_max,
            ) {
                Ok(a) => a,
                Err(_) => continue,
            };
            if a.horizon_steps == 0 {
                continue;
            }
            let (xp, pp) = predict(t, &self.model, a.horizon_steps);
            let center = Vec2::new(xp[0], xp[1]);
            let sigma = ((pp[0][0] + pp[1][1]) * 0.5).max(0.0).sqrt();
            let radius =
                (sigma * (2.0 * std::f64::consts::LN_2).sqrt()).max(self.cfg.safety_radius);
            let outcome =
                mark_future_obstacle(&mut self.field, center, &pp, self.cfg.safety_radius);
            self.goal_clipped |= outcome.goal_clipped;
            self.footprints.push(Footprint {
                center,
                radius,
                track_id: t.id,
            });
        }
        // The vehicle's own cells are always free space.
        self.clear_robot_cells(robot);
    }

    fn clear_robot_cells(&mut self, robot: &RobotState) {
        if let Ok(rc) = self.spec.world_to_cell(robot.pos) {
            for (dx, dy) in disk_offsets(robot.radius, self.spec.cell_size()) {
                let x = rc.x as i32 + dx;
                let y = rc.y as i32 + dy;
                if x >= 0 && y >= 0 {
                    let c = CellIndex::new(x as usize, y as usize);
                    if self.spec.in_bounds(c) {
                        self.field.force_free(c);
                    }
                }
            }
        }
    }

    /// Fuse one tick of sensing: update the static map, the tracks, and
    /// restamp the field's boundary conditions.
    pub fn map_update(&mut self, frame: &SensorFrame, robot: &RobotState) {
        self.tick += 1;
        self.fuse_static_hits(frame);
        self.update_tracks(frame);
        self.rebuild_field(robot);
    }

    /// Lowest-potential free 4-neighbor of the robot's cell, as a world
    /// point. Local escape direction for blocked ticks.
    fn drift_target(&self, start: CellIndex) -> Option<Vec2<f64>> {
        self.spec
            .neighbors4(start)
            .filter(|&n| self.field.class(n) == CellClass::Free)
            .min_by(|&a, &b| {
                self.field
                    .phi(a)
                    .partial_cmp(&self.field.phi(b))
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .map(|c| self.spec.cell_center(c))
    }

    /// Solve the field and produce the next waypoint. `map_update` must
    /// have run this tick.
    pub fn plan_tick(&mut self, robot: &RobotState) -> PlanStep {
        let start = match self.spec.world_to_cell(robot.pos) {
            Ok(c) => c,
            Err(_) => return PlanStep::Blocked { drift: None },
        };
        if self.field.class(start) == CellClass::Obstacle {
            // A footprint swallowed the robot's cell; carve it back out.
            self.field.force_free(start);
        }
        self.field.set_parallel(self.cfg.parallel_sweeps);
        self.field
            .solve(self.cfg.sweeps_per_tick, self.cfg.solve_tolerance);
        let idx = IndexMatrix::build(&self.field);
        let max_len = self.spec.cell_count();
        let path = match extract_path(&idx, &self.field, start, max_len) {
            Ok(p) => p,
            Err(_) => {
                return PlanStep::Blocked {
                    drift: self.drift_target(start),
                }
            }
        };
        let band = relax_path(
            &path,
            &self.field,
            self.cfg.band_iterations,
            BandParams {
                tension_k: self.cfg.tension_k,
                step: self.cfg.band_step,
            },
        );
        let robot_units = self.spec.world_to_units(robot.pos);
        let target = band
            .points()
            .iter()
            .find(|p| p.distance(robot_units) >= 1.0)
            .copied()
            .or_else(|| band.last())
            .map(|u| self.spec.units_to_world(u));
        self.current_path = Some(band);
        match target {
            Some(w) => PlanStep::Waypoint(w),
            None => PlanStep::Blocked {
                drift: self.drift_target(start),
            },
        }
    }
}
