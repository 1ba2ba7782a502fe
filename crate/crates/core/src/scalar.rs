//! Scalar abstraction for the numeric kernels.

use std::fmt;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar the field, band, filter, and warp math run on.
///
/// Implemented for `f32` and `f64`. The solver design assumes `f64` for
/// production grids (on large maps the potential flattens toward 1 far from
/// the goal and `f32` produces spurious gradient ties), but every kernel is
/// checked to compile and behave under `f32` as well.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + fmt::Debug
    + fmt::Display
    + Send
    + Sync
    + 'static
{
    /// Shorthand for converting an `f64` constant.
    #[inline]
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 constant")
    }

    /// Lossy conversion back to `f64` (exact for `f32`/`f64`).
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}
