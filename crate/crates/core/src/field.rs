//! Harmonic potential field: Dirichlet boundary cells (goal 0, obstacles 1),
//! red-black Gauss-Seidel relaxation, and the steepest-descent index matrix.
//!
//! The grid is stored with a one-cell padding ring that behaves as an
//! obstacle (potential 1), so the relaxation stencil never needs bounds
//! checks and the domain is closed.
//!
//! The red-black sweep is the reconciliation of the sequential in-place
//! update with a per-cell parallel execution contract: cells of one
//! checkerboard color only read the other color, so a color pass can run
//! on any number of workers and still produce bit-identical results.

use rayon::prelude::*;
use thiserror::Error;

use crate::band::PathPolyline;
use crate::geom::Vec2;
use crate::grid::{CellClass, CellIndex, GridSpec};
use crate::scalar::Real;

#[derive(Debug, Error, PartialEq)]
pub enum FieldError {
    #[error("cell ({x}, {y}) is classified both goal and obstacle")]
    OverlappingClasses { x: usize, y: usize },
    #[error("no path: pointer chain hits a cycle, a dead end, or the length cap")]
    NoPath,
    #[error("path extraction started out of bounds or inside an obstacle")]
    InvalidStart,
}

/// Below this many cells per color, a parallel pass is not worth the
/// fork-join overhead.
const PAR_MIN_CELLS: usize = 4096;

struct SyncPtr<T>(*mut T);
unsafe impl<T> Send for SyncPtr<T> {}
unsafe impl<T> Sync for SyncPtr<T> {}

impl<T> SyncPtr<T> {
    // Accessor rather than field read so closures capture the Sync wrapper,
    // not the bare pointer.
    fn get(&self) -> *mut T {
        self.0
    }
}

/// One relaxation update: the cell becomes the mean of its four padded
/// neighbors. Shared by the sequential and parallel paths so both produce
/// the same floating-point result.
///
/// Safety: `i` must index a non-padding cell of a padded array of stride
/// `pw`, and no other thread may concurrently write `i` or its neighbors.
#[inline(always)]
unsafe fn relax_cell<T: Real>(p: *mut T, i: usize, pw: usize, quarter: T) -> T {
    let s = ((*p.add(i - 1) + *p.add(i + 1)) + (*p.add(i - pw) + *p.add(i + pw))) * quarter;
    let d = (s - *p.add(i)).abs();
    *p.add(i) = s;
    d
}

/// Discretized harmonic function over a grid, with fixed goal/obstacle
/// cells and relaxable free cells.
#[derive(Debug, Clone)]
pub struct PotentialField<T> {
    spec: GridSpec<T>,
    pw: usize,
    phi: Vec<T>,
    class: Vec<CellClass>,
    sweeps: u64,
    red: Vec<u32>,
    black: Vec<u32>,
    lists_stale: bool,
    parallel: bool,
}

impl<T: Real> PotentialField<T> {
    /// Build a field with the given fixed cells; all other cells start at
    /// the free-space seed value 0.5.
    pub fn initialize(
        spec: GridSpec<T>,
        goal_cells: impl IntoIterator<Item = CellIndex>,
        obstacle_cells: impl IntoIterator<Item = CellIndex>,
    ) -> Result<Self, FieldError> {
        let pw = spec.width_cells() + 2;
        let ph = spec.height_cells() + 2;
        let n = pw * ph;
        assert!(n < u32::MAX as usize, "grid too large for u32 cell indices");
        let mut field = PotentialField {
            spec,
            pw,
            phi: vec![T::one(); n],
            class: vec![CellClass::Obstacle; n],
            sweeps: 0,
            red: Vec::new(),
            black: Vec::new(),
            lists_stale: true,
            parallel: false,
        };
        for y in 0..spec.height_cells() {
            for x in 0..spec.width_cells() {
                let i = field.pidx(CellIndex::new(x, y));
                field.class[i] = CellClass::Free;
                field.phi[i] = T::of(0.5);
            }
        }
        for c in goal_cells {
            debug_assert!(spec.in_bounds(c));
            let i = field.pidx(c);
            field.class[i] = CellClass::Goal;
            field.phi[i] = T::zero();
        }
        for c in obstacle_cells {
            debug_assert!(spec.in_bounds(c));
            let i = field.pidx(c);
            if field.class[i] == CellClass::Goal {
                return Err(FieldError::OverlappingClasses { x: c.x, y: c.y });
            }
            field.class[i] = CellClass::Obstacle;
            field.phi[i] = T::one();
        }
        Ok(field)
    }

    #[inline]
    fn pidx(&self, c: CellIndex) -> usize {
        (c.y + 1) * self.pw + (c.x + 1)
    }

    pub fn spec(&self) -> &GridSpec<T> {
        &self.spec
    }

    /// Number of relaxation sweeps applied so far.
    pub fn sweep_count(&self) -> u64 {
        self.sweeps
    }

    pub fn class(&self, c: CellIndex) -> CellClass {
        debug_assert!(self.spec.in_bounds(c));
        self.class[self.pidx(c)]
    }

    pub fn phi(&self, c: CellIndex) -> T {
        debug_assert!(self.spec.in_bounds(c));
        self.phi[self.pidx(c)]
    }

    /// Enable or disable data-parallel color passes. Results are identical
    /// either way; this only selects the execution strategy.
    pub fn set_parallel(&mut self, parallel: bool) {
        self.parallel = parallel;
    }

    pub fn parallel(&self) -> bool {
        self.parallel
    }

    /// Potential values as a `width x height` row-major array (no padding).
    pub fn phi_row_major(&self) -> Vec<T> {
        let (w, h) = (self.spec.width_cells(), self.spec.height_cells());
        let mut out = Vec::with_capacity(w * h);
        for y in 0..h {
            for x in 0..w {
                out.push(self.phi[self.pidx(CellIndex::new(x, y))]);
            }
        }
        out
    }

    /// Reset every cell to Free for a new planning tick. With `warm_start`
    /// the previous potential of still-free cells is kept and cells that
    /// were fixed last tick are seeded from their current neighbor mean (a
    /// 0.5 seed inside an evolved field would punch an attractive pit and
    /// trap the descent). Without warm start all free space re-seeds at 0.5.
    pub fn begin_tick(&mut self, warm_start: bool) {
        let half = T::of(0.5);
        for y in 0..self.spec.height_cells() {
            for x in 0..self.spec.width_cells() {
                let i = self.pidx(CellIndex::new(x, y));
                if !warm_start {
                    self.phi[i] = half;
                } else if self.class[i] != CellClass::Free {
                    self.phi[i] = self.neighbor_mean(i);
                }
                self.class[i] = CellClass::Free;
            }
        }
        self.lists_stale = true;
    }

    #[inline]
    fn neighbor_mean(&self, i: usize) -> T {
        ((self.phi[i - 1] + self.phi[i + 1]) + (self.phi[i - self.pw] + self.phi[i + self.pw]))
            * T::of(0.25)
    }

    /// Pin a goal cell at potential 0.
    pub fn set_goal(&mut self, c: CellIndex) {
        let i = self.pidx(c);
        self.class[i] = CellClass::Goal;
        self.phi[i] = T::zero();
        self.lists_stale = true;
    }

    /// Pin an obstacle cell at potential 1. Goal cells are never
    /// overwritten. Returns whether the cell newly became an obstacle
    /// (marking is idempotent, so re-stamps report `false`).
    pub fn set_obstacle(&mut self, c: CellIndex) -> bool {
        let i = self.pidx(c);
        match self.class[i] {
            CellClass::Goal => false,
            CellClass::Obstacle => false,
            CellClass::Free => {
                self.class[i] = CellClass::Obstacle;
                self.phi[i] = T::one();
                self.lists_stale = true;
                true
            }
        }
    }

    /// Force a cell back to free space (used to clear the robot's own
    /// footprint), seeding it from the neighbor mean so no artificial
    /// valley appears. Goal cells are left alone.
    pub fn force_free(&mut self, c: CellIndex) {
        let i = self.pidx(c);
        if self.class[i] == CellClass::Obstacle {
            self.class[i] = CellClass::Free;
            self.phi[i] = self.neighbor_mean(i);
            self.lists_stale = true;
        }
    }

    fn rebuild_color_lists(&mut self) {
        self.red.clear();
        self.black.clear();
        for y in 0..self.spec.height_cells() {
            for x in 0..self.spec.width_cells() {
                let c = CellIndex::new(x, y);
                let i = self.pidx(c);
                if self.class[i] == CellClass::Free {
                    if (x + y) % 2 == 0 {
                        self.red.push(i as u32);
                    } else {
                        self.black.push(i as u32);
                    }
                }
            }
        }
        self.lists_stale = false;
    }

    fn color_pass(&mut self, color_is_red: bool) -> T {
        let quarter = T::of(0.25);
        let pw = self.pw;
        let list = if color_is_red { &self.red } else { &self.black };
        let phi_ptr = self.phi.as_mut_ptr();
        if self.parallel && list.len() >= PAR_MIN_CELLS {
            // One chunk per worker: a color pass is perfectly balanced, so
            // finer splits only add fork-join overhead.
            let chunk = list.len().div_ceil(rayon::current_num_threads()).max(2048);
            let sync = SyncPtr(phi_ptr);
            list.par_chunks(chunk)
                .map(|chunk| {
                    let p = sync.get();
                    let mut local = T::zero();
                    for &i in chunk {
                        // In-grid cells of one color write only themselves and
                        // read only the other color and the fixed padding.
                        let d = unsafe { relax_cell(p, i as usize, pw, quarter) };
                        if d > local {
                            local = d;
                        }
                    }
                    local
                })
                .reduce(T::zero, |a, b| if a > b { a } else { b })
        } else {
            let mut max_d = T::zero();
            for &i in list {
                let d = unsafe { relax_cell(phi_ptr, i as usize, pw, quarter) };
                if d > max_d {
                    max_d = d;
                }
            }
            max_d
        }
    }

    /// One red-black sweep: all red free cells are updated from current
    /// values, then all black free cells from the freshly written reds.
    /// Returns the maximum absolute change over all free cells. The result
    /// is bit-identical for any worker count.
    pub fn relax_sweep(&mut self) -> T {
        if self.lists_stale {
            self.rebuild_color_lists();
        }
        let r = self.color_pass(true);
        let b = self.color_pass(false);
        self.sweeps += 1;
        if r > b {
            r
        } else {
            b
        }
    }

    /// Run sweeps until `max_sweeps` is reached or the residual drops below
    /// `tol`. `tol = 0` disables the early exit (the residual is never
    /// negative), matching the fixed-sweep-count production configuration.
    pub fn solve(&mut self, max_sweeps: u32, tol: T) -> T {
        let mut residual = T::zero();
        for _ in 0..max_sweeps {
            residual = self.relax_sweep();
            if residual < tol {
                break;
            }
        }
        residual
    }

    /// Bilinear sample of the potential at continuous cell-unit
    /// coordinates. Out-of-grid support points contribute 1 (the boundary
    /// acts as an obstacle).
    pub fn sample_phi_units(&self, u: Vec2<T>) -> T {
        let half = T::of(0.5);
        let gx = u.x - half;
        let gy = u.y - half;
        let i0 = gx.floor();
        let j0 = gy.floor();
        let tx = gx - i0;
        let ty = gy - j0;
        let i0 = i0.as_f64() as isize;
        let j0 = j0.as_f64() as isize;
        let at = |i: isize, j: isize| -> T {
            if i < 0
                || j < 0
                || i >= self.spec.width_cells() as isize
                || j >= self.spec.height_cells() as isize
            {
                T::one()
            } else {
                self.phi[self.pidx(CellIndex::new(i as usize, j as usize))]
            }
        };
        let one = T::one();
        let p00 = at(i0, j0);
        let p10 = at(i0 + 1, j0);
        let p01 = at(i0, j0 + 1);
        let p11 = at(i0 + 1, j0 + 1);
        (p00 * (one - tx) + p10 * tx) * (one - ty) + (p01 * (one - tx) + p11 * tx) * ty
    }

    /// Class of the cell containing continuous cell-unit coordinates;
    /// outside the grid everything is an obstacle.
    pub fn class_at_units(&self, u: Vec2<T>) -> CellClass {
        if u.x < T::zero() || u.y < T::zero() {
            return CellClass::Obstacle;
        }
        let x = u.x.floor().as_f64() as usize;
        let y = u.y.floor().as_f64() as usize;
        if x >= self.spec.width_cells() || y >= self.spec.height_cells() {
            return CellClass::Obstacle;
        }
        self.class(CellIndex::new(x, y))
    }
}

/// Per-cell pointer to the 4-neighbor with the lowest potential: the
/// discrete steepest-descent field. Goal and obstacle cells carry no
/// pointer.
#[derive(Debug, Clone)]
pub struct IndexMatrix {
    width: usize,
    height: usize,
    next: Vec<Option<CellIndex>>,
}

impl IndexMatrix {
    /// Build from a (solved) field. Ties between neighbors are broken by
    /// the fixed `[+x, -x, +y, -y]` order.
    pub fn build<T: Real>(field: &PotentialField<T>) -> Self {
        let spec = *field.spec();
        let (w, h) = (spec.width_cells(), spec.height_cells());
        let mut next = vec![None; w * h];
        for y in 0..h {
            for x in 0..w {
                let c = CellIndex::new(x, y);
                if field.class(c) != CellClass::Free {
                    continue;
                }
                let mut best: Option<(T, CellIndex)> = None;
                for n in spec.neighbors4(c) {
                    let p = field.phi(n);
                    if best.is_none_or(|(bp, _)| p < bp) {
                        best = Some((p, n));
                    }
                }
                next[y * w + x] = best.map(|(_, n)| n);
            }
        }
        IndexMatrix {
            width: w,
            height: h,
            next,
        }
    }

    pub fn next(&self, c: CellIndex) -> Option<CellIndex> {
        self.next[c.y * self.width + c.x]
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }
}

/// Follow descent pointers from `start` until a goal cell is reached.
/// A revisited cell, a dead end, or exceeding `max_len` signals a blocked
/// situation (`NoPath`).
pub fn extract_path<T: Real>(
    idx: &IndexMatrix,
    field: &PotentialField<T>,
    start: CellIndex,
    max_len: usize,
) -> Result<PathPolyline<T>, FieldError> {
    let spec = field.spec();
    if !spec.in_bounds(start) || field.class(start) == CellClass::Obstacle {
        return Err(FieldError::InvalidStart);
    }
    let w = spec.width_cells();
    let mut visited = vec![false; w * spec.height_cells()];
    let mut cells = vec![start];
    visited[start.y * w + start.x] = true;
    let mut cur = start;
    while field.class(cur) != CellClass::Goal {
        let next = idx.next(cur).ok_or(FieldError::NoPath)?;
        if field.class(next) == CellClass::Obstacle {
            return Err(FieldError::NoPath);
        }
        if visited[next.y * w + next.x] {
            return Err(FieldError::NoPath);
        }
        visited[next.y * w + next.x] = true;
        cells.push(next);
        if cells.len() > max_len {
            return Err(FieldError::NoPath);
        }
        cur = next;
    }
    Ok(PathPolyline::from_cells(&cells))
}
