//! Rubber band smoothing: the extracted grid path is deformed toward the
//! equilibrium of spring tensions from adjacent waypoints and a force
//! derived from the harmonic potential.
//!
//! Waypoint positions are continuous (sub-cell) cell-unit coordinates;
//! endpoints are pinned. Each iteration every interior waypoint evaluates
//! the resultant force magnitude at its current position and at eight
//! compass candidates one `step` away, and moves to the candidate that
//! minimizes it.

use thiserror::Error;

use crate::field::PotentialField;
use crate::geom::Vec2;
use crate::grid::{CellClass, CellIndex};
use crate::scalar::Real;

#[derive(Debug, Error, PartialEq)]
pub enum BandError {
    #[error("waypoint index {0} is an endpoint or out of range")]
    IndexOutOfRange(usize),
    #[error("interpolated potential at or above 1: point inside/adjacent to an obstacle")]
    SingularPotential,
}

/// Ordered waypoint chain in continuous cell units. The first and last
/// waypoints (robot and goal) are immutable under relaxation.
#[derive(Debug, Clone, PartialEq)]
pub struct PathPolyline<T> {
    points: Vec<Vec2<T>>,
}

impl<T: Real> PathPolyline<T> {
    pub fn from_points(points: Vec<Vec2<T>>) -> Self {
        PathPolyline { points }
    }

    /// Waypoints at the centers of the given cells.
    pub fn from_cells(cells: &[CellIndex]) -> Self {
        let half = T::of(0.5);
        PathPolyline {
            points: cells
                .iter()
                .map(|c| Vec2::new(T::of(c.x as f64) + half, T::of(c.y as f64) + half))
                .collect(),
        }
    }

    pub fn points(&self) -> &[Vec2<T>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn first(&self) -> Option<Vec2<T>> {
        self.points.first().copied()
    }

    pub fn last(&self) -> Option<Vec2<T>> {
        self.points.last().copied()
    }

    /// Cells containing each waypoint (exact for paths built by
    /// `from_cells`).
    pub fn cells_along(&self) -> Vec<CellIndex> {
        self.points
            .iter()
            .map(|p| {
                CellIndex::new(
                    p.x.floor().as_f64().max(0.0) as usize,
                    p.y.floor().as_f64().max(0.0) as usize,
                )
            })
            .collect()
    }

    /// Total length (sum of segment lengths) in cell units.
    pub fn length(&self) -> T {
        self.points
            .windows(2)
            .fold(T::zero(), |acc, w| acc + w[0].distance(w[1]))
    }

    /// Largest turning angle (radians) over interior vertices, if any.
    pub fn max_turn_angle(&self) -> Option<T> {
        if self.points.len() < 3 {
            return None;
        }
        let mut max = T::zero();
        for w in self.points.windows(3) {
            let a = (w[1] - w[0]).normalized_or_zero();
            let b = (w[2] - w[1]).normalized_or_zero();
            let cos = a.dot(b).max(-T::one()).min(T::one());
            let ang = cos.acos();
            if ang > max {
                max = ang;
            }
        }
        Some(max)
    }

    /// Insert evenly spaced points so no segment is longer than `max_step`.
    pub fn resample(&self, max_step: T) -> Self {
        let mut out = Vec::with_capacity(self.points.len());
        if let Some(&first) = self.points.first() {
            out.push(first);
        }
        for w in self.points.windows(2) {
            let d = w[0].distance(w[1]);
            if d > max_step {
                let pieces = (d / max_step).ceil().as_f64() as usize;
                for k in 1..pieces {
                    let t = T::of(k as f64 / pieces as f64);
                    out.push(w[0] + (w[1] - w[0]).scale(t));
                }
            }
            out.push(w[1]);
        }
        PathPolyline { points: out }
    }
}

/// Spring constant and candidate step for the relaxation.
#[derive(Debug, Clone, Copy)]
pub struct BandParams<T> {
    /// Tension constant `k_t` of the zero-rest-length springs.
    pub tension_k: T,
    /// Candidate displacement per iteration, in cells.
    pub step: T,
}

impl<T: Real> Default for BandParams<T> {
    fn default() -> Self {
        BandParams {
            tension_k: T::one(),
            step: T::of(0.25),
        }
    }
}

/// Decomposition of the forces acting on one waypoint.
#[derive(Debug, Clone, Copy)]
pub struct ForceBalance<T> {
    pub tension_prev: Vec2<T>,
    pub tension_next: Vec2<T>,
    pub potential_force: Vec2<T>,
    pub resultant: Vec2<T>,
}

/// Spring tensions pulling waypoint `i` toward its two neighbors:
/// `k_t * (w_{i-1} - w_i)` and `k_t * (w_{i+1} - w_i)`.
pub fn tension<T: Real>(
    path: &PathPolyline<T>,
    i: usize,
    tension_k: T,
) -> Result<(Vec2<T>, Vec2<T>), BandError> {
    if i == 0 || i + 1 >= path.len() {
        return Err(BandError::IndexOutOfRange(i));
    }
    let w = path.points();
    Ok((
        (w[i - 1] - w[i]).scale(tension_k),
        (w[i + 1] - w[i]).scale(tension_k),
    ))
}

/// Scalar potential force for a trial move:
/// `(1 - phi(candidate))^-1 - (1 - phi(current))^-1`, positive when the
/// candidate sits at higher potential (it is penalized). The vector force
/// on the move acts along `-(candidate - current)` scaled by this value.
pub fn potential_force<T: Real>(
    field: &PotentialField<T>,
    current: Vec2<T>,
    candidate: Vec2<T>,
) -> Result<T, BandError> {
    let eps = T::of(1e-9);
    let one = T::one();
    let pc = field.sample_phi_units(current);
    let pd = field.sample_phi_units(candidate);
    if pc >= one - eps || pd >= one - eps {
        return Err(BandError::SingularPotential);
    }
    Ok((one - pd).recip() - (one - pc).recip())
}

/// Force balance on waypoint `i` for a trial move to `candidate`
/// (`None` evaluates the waypoint where it stands; the potential term is
/// then zero because no move is proposed).
pub fn force_balance<T: Real>(
    path: &PathPolyline<T>,
    field: &PotentialField<T>,
    i: usize,
    candidate: Option<Vec2<T>>,
) -> Result<ForceBalance<T>, BandError> {
    let w = path.points();
    if i == 0 || i + 1 >= w.len() {
        return Err(BandError::IndexOutOfRange(i));
    }
    let pos = candidate.unwrap_or(w[i]);
    let t_prev = (w[i - 1] - pos).scale(T::one());
    let t_next = (w[i + 1] - pos).scale(T::one());
    let f_vec = match candidate {
        Some(c) => {
            let dir = (c - w[i]).normalized_or_zero();
            let f = potential_force(field, w[i], c)?;
            dir.scale(-f)
        }
        None => Vec2::zero(),
    };
    Ok(ForceBalance {
        tension_prev: t_prev,
        tension_next: t_next,
        potential_force: f_vec,
        resultant: t_prev + t_next + f_vec,
    })
}

const COMPASS: [(f64, f64); 8] = [
    (1.0, 0.0),
    (-1.0, 0.0),
    (0.0, 1.0),
    (0.0, -1.0),
    (
        std::f64::consts::FRAC_1_SQRT_2,
        std::f64::consts::FRAC_1_SQRT_2,
    ),
    (
        -std::f64::consts::FRAC_1_SQRT_2,
        std::f64::consts::FRAC_1_SQRT_2,
    ),
    (
        std::f64::consts::FRAC_1_SQRT_2,
        -std::f64::consts::FRAC_1_SQRT_2,
    ),
    (
        -std::f64::consts::FRAC_1_SQRT_2,
        -std::f64::consts::FRAC_1_SQRT_2,
    ),
];

/// Iteratively drag interior waypoints toward force equilibrium, then
/// resample so consecutive waypoints are at most one cell apart.
///
/// Candidates inside obstacle cells or with singular potential are skipped
/// (treated as infinite resultant); a waypoint only moves on strict
/// improvement, so an equilibrium chain is left untouched. Endpoints are
/// never moved.
pub fn relax_path<T: Real>(
    path: &PathPolyline<T>,
    field: &PotentialField<T>,
    iterations: u32,
    params: BandParams<T>,
) -> PathPolyline<T> {
    if iterations == 0 {
        return path.clone();
    }
    let mut pts = path.points().to_vec();
    if pts.len() < 3 {
        return PathPolyline::from_points(pts).resample(T::one());
    }
    let k = params.tension_k;
    let dirs: Vec<Vec2<T>> = COMPASS
        .iter()
        .map(|&(x, y)| Vec2::new(T::of(x), T::of(y)))
        .collect();
    for _ in 0..iterations {
        // Waypoints update sequentially from start to goal, matching the
        // linked-list semantics of the chain.
        for i in 1..pts.len() - 1 {
            let cur = pts[i];
            let prev = pts[i - 1];
            let next = pts[i + 1];
            let stay = ((prev - cur).scale(k) + (next - cur).scale(k)).norm();
            let mut best = stay;
            let mut best_pos = cur;
            for dir in &dirs {
                let cand = cur + dir.scale(params.step);
                if field.class_at_units(cand) == CellClass::Obstacle {
                    continue;
                }
                let f = match potential_force(field, cur, cand) {
                    Ok(f) => f,
                    Err(_) => continue,
                };
                let f_vec = dir.scale(-f);
                let resultant = ((prev - cand).scale(k) + (next - cand).scale(k) + f_vec).norm();
                if resultant < best {
                    best = resultant;
                    best_pos = cand;
                }
            }
            pts[i] = best_pos;
        }
    }
    PathPolyline::from_points(pts).resample(T::one())
}
