//! Occupancy-grid substrate: coordinate transforms, wall rasterization,
//! and neighborhood iteration.
//!
//! Conventions used by every downstream module:
//!
//! * cells are squares of side `cell_size` meters, cell `(0,0)` has its
//!   lower corner at `origin`;
//! * binning is floor-based, except that points exactly on the maximum
//!   extent edge fall into the last cell so the domain is closed;
//! * the 4-neighborhood order is `[+x, -x, +y, -y]` and doubles as the
//!   tie-break order everywhere a minimum over neighbors is taken;
//! * cells outside the grid behave as obstacles.

use thiserror::Error;

use crate::geom::Vec2;
use crate::scalar::Real;

/// Column/row index of one grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellIndex {
    pub x: usize,
    pub y: usize,
}

impl CellIndex {
    pub fn new(x: usize, y: usize) -> Self {
        CellIndex { x, y }
    }
}

/// Role of a cell in the potential field. Goal and obstacle cells hold
/// fixed potentials (0 and 1); free cells are relaxed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CellClass {
    Goal,
    Obstacle,
    #[default]
    Free,
}

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("invalid grid spec: {0}")]
    InvalidSpec(&'static str),
    #[error("point ({x}, {y}) outside grid extent")]
    OutOfBounds { x: f64, y: f64 },
}

/// Grid geometry: dimensions in cells plus the world-frame placement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec<T> {
    width_cells: usize,
    height_cells: usize,
    cell_size: T,
    origin: Vec2<T>,
}

impl<T: Real> GridSpec<T> {
    pub fn new(
        width_cells: usize,
        height_cells: usize,
        cell_size: T,
        origin: Vec2<T>,
    ) -> Result<Self, GridError> {
        if width_cells == 0 || height_cells == 0 {
            return Err(GridError::InvalidSpec("zero cell count"));
        }
        if cell_size <= T::zero() || !cell_size.is_finite() {
            return Err(GridError::InvalidSpec("cell_size must be positive"));
        }
        Ok(GridSpec {
            width_cells,
            height_cells,
            cell_size,
            origin,
        })
    }

    /// Square grid with its origin at the world origin.
    pub fn square(cells: usize, cell_size: T) -> Result<Self, GridError> {
        Self::new(cells, cells, cell_size, Vec2::zero())
    }

    pub fn width_cells(&self) -> usize {
        self.width_cells
    }

    pub fn height_cells(&self) -> usize {
        self.height_cells
    }

    pub fn cell_count(&self) -> usize {
        self.width_cells * self.height_cells
    }

    pub fn cell_size(&self) -> T {
        self.cell_size
    }

    pub fn origin(&self) -> Vec2<T> {
        self.origin
    }

    /// World-frame width and height covered by the grid.
    pub fn extent(&self) -> Vec2<T> {
        Vec2::new(
            T::of(self.width_cells as f64) * self.cell_size,
            T::of(self.height_cells as f64) * self.cell_size,
        )
    }

    /// Length of the grid diagonal in meters.
    pub fn diagonal(&self) -> T {
        self.extent().norm()
    }

    pub fn in_bounds(&self, c: CellIndex) -> bool {
        c.x < self.width_cells && c.y < self.height_cells
    }

    pub fn contains_world(&self, p: Vec2<T>) -> bool {
        let u = self.world_to_units(p);
        u.x >= T::zero()
            && u.y >= T::zero()
            && u.x <= T::of(self.width_cells as f64)
            && u.y <= T::of(self.height_cells as f64)
    }

    /// World point -> continuous cell-unit coordinates (cell (i,j) covers
    /// `[i, i+1) x [j, j+1)`).
    pub fn world_to_units(&self, p: Vec2<T>) -> Vec2<T> {
        (p - self.origin) / self.cell_size
    }

    /// Continuous cell-unit coordinates -> world point.
    pub fn units_to_world(&self, u: Vec2<T>) -> Vec2<T> {
        self.origin + u.scale(self.cell_size)
    }

    /// Cell containing the world point `p`. Floor-based; points on the
    /// maximum extent edge belong to the last cell.
    pub fn world_to_cell(&self, p: Vec2<T>) -> Result<CellIndex, GridError> {
        let u = self.world_to_units(p);
        let oob = || GridError::OutOfBounds {
            x: p.x.as_f64(),
            y: p.y.as_f64(),
        };
        if u.x < T::zero() || u.y < T::zero() {
            return Err(oob());
        }
        let bin = |v: T, n: usize| -> Result<usize, GridError> {
            let limit = T::of(n as f64);
            if v > limit {
                Err(oob())
            } else if v == limit {
                Ok(n - 1) // closed top edge
            } else {
                Ok(v.floor().as_f64() as usize)
            }
        };
        Ok(CellIndex {
            x: bin(u.x, self.width_cells)?,
            y: bin(u.y, self.height_cells)?,
        })
    }

    /// World coordinates of the center of cell `c`.
    pub fn cell_center(&self, c: CellIndex) -> Vec2<T> {
        self.units_to_world(Vec2::new(T::of(c.x as f64 + 0.5), T::of(c.y as f64 + 0.5)))
    }

    /// The 4-neighbors of `c` in the fixed order `[+x, -x, +y, -y]`,
    /// omitting out-of-bounds entries. This order is the tie-break order
    /// used by the index matrix and everything downstream.
    pub fn neighbors4(&self, c: CellIndex) -> impl Iterator<Item = CellIndex> {
        let w = self.width_cells;
        let h = self.height_cells;
        let mk = |x: usize, y: usize| CellIndex { x, y };
        [
            (c.x + 1 < w).then(|| mk(c.x + 1, c.y)),
            (c.x > 0).then(|| mk(c.x - 1, c.y)),
            (c.y + 1 < h).then(|| mk(c.x, c.y + 1)),
            (c.y > 0).then(|| mk(c.x, c.y - 1)),
        ]
        .into_iter()
        .flatten()
    }

    /// Supercover rasterization of the segment `a`-`b`: every cell whose
    /// closed square the segment touches. The result is watertight against
    /// 4-connected leaks (no diagonal gaps) and symmetric in `a`/`b`.
    pub fn rasterize_segment(&self, a: Vec2<T>, b: Vec2<T>) -> Result<Vec<CellIndex>, GridError> {
        for p in [a, b] {
            if !self.contains_world(p) {
                return Err(GridError::OutOfBounds {
                    x: p.x.as_f64(),
                    y: p.y.as_f64(),
                });
            }
        }
        let au = self.world_to_units(a);
        let bu = self.world_to_units(b);
        let (xlo, xhi) = (au.x.min(bu.x), au.x.max(bu.x));

        // Index range of closed intervals [i, i+1] meeting [lo, hi].
        let span = |lo: T, hi: T, n: usize| -> (usize, usize) {
            let first = (lo.ceil().as_f64() as isize - 1).max(0) as usize;
            let last = (hi.floor().as_f64() as usize).min(n - 1);
            (first.min(n - 1), last)
        };

        let dx = bu.x - au.x;
        let dy = bu.y - au.y;
        let (ix0, ix1) = span(xlo, xhi, self.width_cells);
        let mut cells = Vec::new();
        for ix in ix0..=ix1 {
            let (ymin, ymax) = if dx.abs() < T::of(1e-12) {
                (au.y.min(bu.y), au.y.max(bu.y))
            } else {
                // y-range of the segment restricted to this column's slab.
                let cx0 = xlo.max(T::of(ix as f64));
                let cx1 = xhi.min(T::of(ix as f64 + 1.0));
                let y_at = |x: T| au.y + (x - au.x) / dx * dy;
                let (y0, y1) = (y_at(cx0), y_at(cx1));
                (y0.min(y1), y0.max(y1))
            };
            let (iy0, iy1) = span(ymin, ymax, self.height_cells);
            for iy in iy0..=iy1 {
                cells.push(CellIndex { x: ix, y: iy });
            }
        }
        cells.sort_unstable();
        cells.dedup();
        Ok(cells)
    }
}
