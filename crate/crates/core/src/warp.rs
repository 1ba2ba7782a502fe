//! Time-warped grid: the family of rotated ellipses around the robot,
//! elongated along its heading (axis ratio 4:1, center pushed 0.9 of the
//! major axis forward). The ellipse an obstacle sits on gives its warp
//! number, which combined with the robot/obstacle speed ratio sets how
//! many steps ahead the Kalman filter predicts its position before the
//! footprint is stamped into the potential field.

use thiserror::Error;

use crate::field::PotentialField;
use crate::geom::Vec2;
use crate::grid::CellClass;
use crate::scalar::Real;
use crate::tracking::Mat4;

#[derive(Debug, Error, PartialEq)]
pub enum WarpError {
    #[error("no warp radius in [0, r_max] for this obstacle position")]
    NoSolution,
}

/// Minimum obstacle speed used for the speed ratio, m/s.
const SPEED_FLOOR: f64 = 0.05;
/// Major/minor axis ratio of the warp ellipses.
const AXIS_RATIO: f64 = 4.0;
/// Ellipse center offset along the heading, as a fraction of the major axis.
const CENTER_OFFSET: f64 = 0.9;

/// Robot pose plus the warp-band parameters. The axis ratio and center
/// offset are fixed characteristics of the ellipse family.
#[derive(Debug, Clone, Copy)]
pub struct WarpGeometry<T> {
    robot_pos: Vec2<T>,
    heading: T,
    warp_spacing: T,
    r_max: T,
}

impl<T: Real> WarpGeometry<T> {
    /// `warp_spacing` is the major-axis length of one warp band in meters;
    /// `r_max` bounds the radius search (four grid diagonals is ample).
    pub fn new(robot_pos: Vec2<T>, heading: T, warp_spacing: T, r_max: T) -> Self {
        WarpGeometry {
            robot_pos,
            heading,
            warp_spacing,
            r_max,
        }
    }

    pub fn robot_pos(&self) -> Vec2<T> {
        self.robot_pos
    }

    pub fn heading(&self) -> T {
        self.heading
    }

    pub fn warp_spacing(&self) -> T {
        self.warp_spacing
    }

    /// Obstacle position in the heading-aligned frame: `u` along the
    /// heading, `w` across it.
    fn local(&self, obstacle: Vec2<T>) -> (T, T) {
        let d = obstacle - self.robot_pos;
        let (sin, cos) = self.heading.sin_cos();
        (cos * d.x + sin * d.y, sin * d.x - cos * d.y)
    }

    /// Value of the rotated-ellipse equation's left side for a candidate
    /// major axis `r_x` (minor axis `r_x / 4`, self-consistent center).
    /// Equals 1 exactly when the obstacle lies on that ellipse.
    pub fn ellipse_lhs(&self, obstacle: Vec2<T>, r_x: T) -> T {
        let (u, w) = self.local(obstacle);
        let off = u - T::of(CENTER_OFFSET) * r_x;
        let r_y = r_x / T::of(AXIS_RATIO);
        off * off / (r_x * r_x) + w * w / (r_y * r_y)
    }
}

/// Major axis of the ellipse through the obstacle: the unique `r >= 0`
/// with `r = sqrt((u - 0.9 r)^2 + 16 w^2)`. Solved by bisection;
/// `g(r) = r - rhs(r)` is strictly increasing (slope at least 0.1), so the
/// bracket `[0, r_max]` pins the root down to machine precision.
pub fn warp_radius<T: Real>(geom: &WarpGeometry<T>, obstacle: Vec2<T>) -> Result<T, WarpError> {
    let (u, w) = geom.local(obstacle);
    let off_c = T::of(CENTER_OFFSET);
    let sixteen = T::of(AXIS_RATIO * AXIS_RATIO);
    let rhs = |r: T| {
        let a = u - off_c * r;
        (a * a + sixteen * w * w).sqrt()
    };
    let g = |r: T| r - rhs(r);
    let mut lo = T::zero();
    let mut hi = geom.r_max;
    let glo = g(lo);
    if glo == T::zero() {
        return Ok(T::zero());
    }
    if glo > T::zero() || g(hi) < T::zero() {
        return Err(WarpError::NoSolution);
    }
    for _ in 0..200 {
        let mid = (lo + hi) * T::of(0.5);
        if mid == lo || mid == hi {
            break;
        }
        if g(mid) < T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo + hi) * T::of(0.5))
}

/// Quantized warp number: which band the ellipse falls into, never below 1.
pub fn warp_number<T: Real>(r_x: T, geom: &WarpGeometry<T>) -> u32 {
    let t = (r_x / geom.warp_spacing).ceil().as_f64() as u32;
    t.max(1)
}

/// Prediction horizon in filter steps: the speed ratio
/// `v = robot_speed / max(obstacle_speed, 0.05)` times the warp number,
/// rounded and clamped to `[0, horizon_max]`.
pub fn prediction_horizon<T: Real>(
    warp: u32,
    robot_speed: T,
    obstacle_speed: T,
    horizon_max: u32,
) -> u32 {
    let v = robot_speed / obstacle_speed.max(T::of(SPEED_FLOOR));
    let steps = (v * T::of(warp as f64)).round().as_f64();
    if steps <= 0.0 {
        0
    } else if steps >= horizon_max as f64 {
        horizon_max
    } else {
        steps as u32
    }
}

/// Warp assignment for one obstacle: continuous radius, band number,
/// speed ratio, and the resulting horizon.
#[derive(Debug, Clone, Copy)]
pub struct WarpAssignment<T> {
    pub obstacle_id: u32,
    pub r_x: T,
    pub warp: u32,
    pub speed_ratio: T,
    pub horizon_steps: u32,
}

/// Full pipeline for one obstacle position and speed estimate.
pub fn assign<T: Real>(
    geom: &WarpGeometry<T>,
    obstacle_id: u32,
    obstacle_pos: Vec2<T>,
    robot_speed: T,
    obstacle_speed: T,
    horizon_max: u32,
) -> Result<WarpAssignment<T>, WarpError> {
    let r_x = warp_radius(geom, obstacle_pos)?;
    let warp = warp_number(r_x, geom);
    let speed_ratio = robot_speed / obstacle_speed.max(T::of(SPEED_FLOOR));
    Ok(WarpAssignment {
        obstacle_id,
        r_x,
        warp,
        speed_ratio,
        horizon_steps: prediction_horizon(warp, robot_speed, obstacle_speed, horizon_max),
    })
}

/// Result of stamping one predicted footprint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MarkOutcome {
    pub cells_marked: usize,
    /// The footprint touched the goal region and was clipped around it.
    pub goal_clipped: bool,
}

/// Stamp a predicted obstacle position into the field as fixed obstacle
/// cells. The footprint is the union of the half-maximum disk of a
/// Gaussian whose spread comes from the predicted covariance
/// (`sigma = sqrt((P00 + P11) / 2)`) and a hard safety disk. Goal cells
/// are never overwritten.
pub fn mark_future_obstacle<T: Real>(
    field: &mut PotentialField<T>,
    center: Vec2<T>,
    cov_pred: &Mat4<T>,
    safety_radius: T,
) -> MarkOutcome {
    let spec = *field.spec();
    let half = T::of(0.5);
    let sigma = ((cov_pred[0][0] + cov_pred[1][1]) * half)
        .max(T::zero())
        .sqrt();
    // exp(-d^2 / (2 sigma^2)) >= 0.5  <=>  d <= sigma * sqrt(2 ln 2)
    let gauss_radius = sigma * T::of((2.0 * std::f64::consts::LN_2).sqrt());
    let radius = gauss_radius.max(safety_radius);
    let mut outcome = MarkOutcome::default();
    if radius < T::zero() || !radius.is_finite() {
        return outcome;
    }
    let u = spec.world_to_units(center);
    let r_cells = (radius / spec.cell_size()).as_f64();
    let x0 = ((u.x.as_f64() - r_cells).floor().max(0.0)) as usize;
    let y0 = ((u.y.as_f64() - r_cells).floor().max(0.0)) as usize;
    let x1 = ((u.x.as_f64() + r_cells).ceil().max(0.0) as usize).min(spec.width_cells() - 1);
    let y1 = ((u.y.as_f64() + r_cells).ceil().max(0.0) as usize).min(spec.height_cells() - 1);
    for y in y0..=y1 {
        for x in x0..=x1 {
            let c = crate::grid::CellIndex::new(x, y);
            let d = spec.cell_center(c).distance(center);
            if d <= radius {
                if field.class(c) == CellClass::Goal {
                    outcome.goal_clipped = true;
                } else if field.set_obstacle(c) {
                    outcome.cells_marked += 1;
                }
            }
        }
    }
    outcome
}
