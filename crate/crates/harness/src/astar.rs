//! Grid A* over the scenario's true wall map. This is the reference
//! planner the experiments are judged against, not part of the navigation
//! pipeline: the 4-connected variant answers reachability questions, the
//! 8-connected octile variant measures shortest-path length in a metric
//! comparable to a smoothed trajectory.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use warpgrid_core::{CellIndex, GridSpec, Vec2};

use crate::scenario::Scenario;

/// Passability mask on the same grid the planner uses, built from the
/// scenario's true walls dilated by the vehicle radius.
pub struct OccupancyMask {
    width: usize,
    height: usize,
    blocked: Vec<bool>,
    spec: GridSpec,
}

impl OccupancyMask {
    pub fn from_scenario(scenario: &Scenario, inflate_m: f64) -> Self {
        let spec = scenario.grid_spec();
        let (w, h) = (spec.width_cells(), spec.height_cells());
        let mut blocked = vec![false; w * h];
        let mut raw = Vec::new();
        for seg in scenario.wall_segments() {
            if let Ok(cells) = spec.rasterize_segment(seg.a, seg.b) {
                raw.extend(cells);
            }
        }
        let r_cells = inflate_m / spec.cell_size();
        let r = r_cells.ceil() as i32;
        for c in raw {
            for dy in -r..=r {
                for dx in -r..=r {
                    if ((dx * dx + dy * dy) as f64).sqrt() > r_cells {
                        continue;
                    }
                    let x = c.x as i32 + dx;
                    let y = c.y as i32 + dy;
                    if x >= 0 && y >= 0 && (x as usize) < w && (y as usize) < h {
                        blocked[y as usize * w + x as usize] = true;
                    }
                }
            }
        }
        OccupancyMask {
            width: w,
            height: h,
            blocked,
            spec,
        }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn is_free(&self, c: CellIndex) -> bool {
        c.x < self.width && c.y < self.height && !self.blocked[c.y * self.width + c.x]
    }

    pub fn cell_of(&self, p: Vec2) -> Option<CellIndex> {
        self.spec.world_to_cell(p).ok()
    }
}

#[derive(PartialEq)]
struct QueueEntry {
    priority: f64,
    cost: f64,
    cell: CellIndex,
}

impl Eq for QueueEntry {}

impl Ord for QueueEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on priority; break ties on the cell for determinism.
        other
            .priority
            .partial_cmp(&self.priority)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.cell.cmp(&self.cell))
    }
}

impl PartialOrd for QueueEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn search(mask: &OccupancyMask, start: CellIndex, goal: CellIndex, diagonal: bool) -> Option<f64> {
    if !mask.is_free(start) || !mask.is_free(goal) {
        return None;
    }
    let (w, h) = (mask.width, mask.height);
    let idx = |c: CellIndex| c.y * w + c.x;
    let mut best = vec![f64::INFINITY; w * h];
    let mut heap = BinaryHeap::new();
    best[idx(start)] = 0.0;
    let heuristic = |c: CellIndex| -> f64 {
        let dx = (c.x as f64 - goal.x as f64).abs();
        let dy = (c.y as f64 - goal.y as f64).abs();
        if diagonal {
            // Octile distance.
            let (lo, hi) = if dx < dy { (dx, dy) } else { (dy, dx) };
            hi - lo + lo * std::f64::consts::SQRT_2
        } else {
            dx + dy
        }
    };
    heap.push(QueueEntry {
        priority: heuristic(start),
        cost: 0.0,
        cell: start,
    });
    const SQRT2: f64 = std::f64::consts::SQRT_2;
    while let Some(QueueEntry { cost, cell, .. }) = heap.pop() {
        if cell == goal {
            return Some(cost);
        }
        if cost > best[idx(cell)] {
            continue;
        }
        let mut push = |nx: i64, ny: i64, step: f64| {
            if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                return;
            }
            let n = CellIndex::new(nx as usize, ny as usize);
            if !mask.is_free(n) {
                return;
            }
            let c = cost + step;
            if c < best[idx(n)] {
                best[idx(n)] = c;
                heap.push(QueueEntry {
                    priority: c + heuristic(n),
                    cost: c,
                    cell: n,
                });
            }
        };
        let (x, y) = (cell.x as i64, cell.y as i64);
        push(x + 1, y, 1.0);
        push(x - 1, y, 1.0);
        push(x, y + 1, 1.0);
        push(x, y - 1, 1.0);
        if diagonal {
            // A diagonal move must not cut a blocked corner.
            let free = |dx: i64, dy: i64| {
                let (nx, ny) = (x + dx, y + dy);
                nx >= 0
                    && ny >= 0
                    && nx < w as i64
                    && ny < h as i64
                    && mask.is_free(CellIndex::new(nx as usize, ny as usize))
            };
            if free(1, 0) && free(0, 1) {
                push(x + 1, y + 1, SQRT2);
            }
            if free(-1, 0) && free(0, 1) {
                push(x - 1, y + 1, SQRT2);
            }
            if free(1, 0) && free(0, -1) {
                push(x + 1, y - 1, SQRT2);
            }
            if free(-1, 0) && free(0, -1) {
                push(x - 1, y - 1, SQRT2);
            }
        }
    }
    None
}

/// 4-connected reachability/cost; cost in meters (Manhattan metric).
pub fn astar4_length_m(mask: &OccupancyMask, start: Vec2, goal: Vec2) -> Option<f64> {
    let s = mask.cell_of(start)?;
    let g = mask.cell_of(goal)?;
    search(mask, s, g, false).map(|c| c * mask.spec.cell_size())
}

/// 8-connected shortest-path length in meters (octile metric), the length
/// baseline for smoothed trajectories.
pub fn astar_octile_length_m(mask: &OccupancyMask, start: Vec2, goal: Vec2) -> Option<f64> {
    let s = mask.cell_of(start)?;
    let g = mask.cell_of(goal)?;
    search(mask, s, g, true).map(|c| c * mask.spec.cell_size())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::Scenario;

    fn empty_room() -> Scenario {
        Scenario::from_toml(
            r#"
name = "t"
extent = [6.4, 6.4]

[robot]
start = [1.0, 1.0]

[goal]
position = [5.0, 1.0]
"#,
        )
        .unwrap()
    }

    #[test]
    fn straight_line_costs_match_geometry() {
        let sc = empty_room();
        let mask = OccupancyMask::from_scenario(&sc, 0.0);
        let a = Vec2::new(1.0, 1.0);
        let b = Vec2::new(5.0, 1.0);
        let m4 = astar4_length_m(&mask, a, b).unwrap();
        let m8 = astar_octile_length_m(&mask, a, b).unwrap();
        assert!((m4 - 4.0).abs() < 1e-9);
        assert!((m8 - 4.0).abs() < 1e-9);
    }

    #[test]
    fn octile_beats_manhattan_on_diagonals() {
        let sc = empty_room();
        let mask = OccupancyMask::from_scenario(&sc, 0.0);
        let a = Vec2::new(1.0, 1.0);
        let b = Vec2::new(5.0, 5.0);
        let m4 = astar4_length_m(&mask, a, b).unwrap();
        let m8 = astar_octile_length_m(&mask, a, b).unwrap();
        assert!((m4 - 8.0).abs() < 1e-9);
        assert!((m8 - 4.0 * std::f64::consts::SQRT_2).abs() < 1e-6);
        assert!(m8 < m4);
    }

    #[test]
    fn wall_blocks_until_inflated_gap_closes() {
        let sc = Scenario::from_toml(
            r#"
name = "t"
extent = [6.4, 6.4]
walls = [[3.0, 0.0, 3.0, 5.0]]

[robot]
start = [1.0, 1.0]

[goal]
position = [5.0, 1.0]
"#,
        )
        .unwrap();
        let mask = OccupancyMask::from_scenario(&sc, 0.0);
        let a = Vec2::new(1.0, 1.0);
        let b = Vec2::new(5.0, 1.0);
        // Detour over the wall top at y ~ 5.0.
        let m4 = astar4_length_m(&mask, a, b).unwrap();
        assert!(m4 > 10.0, "no detour? {m4}");
        // Inflating by enough to reach the extent top closes the gap.
        let sealed = OccupancyMask::from_scenario(&sc, 1.5);
        assert!(astar4_length_m(&sealed, a, b).is_none());
    }
}
