//! Small 2D vector and segment primitives shared by the grid, the band,
//! and the simulator.

use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::scalar::Real;

/// 2D vector. Units are meters in world space and cells in grid space;
/// which one is in play is determined by the call site.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2<T> {
    pub x: T,
    pub y: T,
}

impl<T: Real> Vec2<T> {
    pub fn new(x: T, y: T) -> Self {
        Vec2 { x, y }
    }

    pub fn zero() -> Self {
        Vec2 {
            x: T::zero(),
            y: T::zero(),
        }
    }

    /// Unit vector at `angle` radians from the +x axis.
    pub fn from_angle(angle: T) -> Self {
        Vec2 {
            x: angle.cos(),
            y: angle.sin(),
        }
    }

    pub fn dot(self, other: Self) -> T {
        self.x * other.x + self.y * other.y
    }

    /// 2D cross product (z component).
    pub fn cross(self, other: Self) -> T {
        self.x * other.y - self.y * other.x
    }

    pub fn norm_sq(self) -> T {
        self.dot(self)
    }

    pub fn norm(self) -> T {
        self.norm_sq().sqrt()
    }

    pub fn distance(self, other: Self) -> T {
        (self - other).norm()
    }

    pub fn angle(self) -> T {
        self.y.atan2(self.x)
    }

    /// Normalized copy, or zero if the vector is (near) zero.
    pub fn normalized_or_zero(self) -> Self {
        let n = self.norm();
        if n > T::zero() {
            self / n
        } else {
            Self::zero()
        }
    }

    pub fn scale(self, s: T) -> Self {
        Vec2 {
            x: self.x * s,
            y: self.y * s,
        }
    }
}

impl<T: Real> Add for Vec2<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl<T: Real> Sub for Vec2<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl<T: Real> Mul<T> for Vec2<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        self.scale(s)
    }
}

impl<T: Real> Div<T> for Vec2<T> {
    type Output = Self;
    fn div(self, s: T) -> Self {
        Vec2::new(self.x / s, self.y / s)
    }
}

impl<T: Real> Neg for Vec2<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Vec2::new(-self.x, -self.y)
    }
}

/// Line segment between two points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment<T> {
    pub a: Vec2<T>,
    pub b: Vec2<T>,
}

impl<T: Real> Segment<T> {
    pub fn new(a: Vec2<T>, b: Vec2<T>) -> Self {
        Segment { a, b }
    }

    pub fn length(self) -> T {
        self.a.distance(self.b)
    }

    /// Distance from `p` to the closest point of the segment.
    pub fn distance_to_point(self, p: Vec2<T>) -> T {
        let d = self.b - self.a;
        let len_sq = d.norm_sq();
        if len_sq == T::zero() {
            return self.a.distance(p);
        }
        let t = ((p - self.a).dot(d) / len_sq).max(T::zero()).min(T::one());
        (self.a + d.scale(t)).distance(p)
    }
}

/// Distance along a ray (origin, unit direction) to the segment, if it hits.
pub fn ray_segment_hit<T: Real>(origin: Vec2<T>, dir: Vec2<T>, seg: Segment<T>) -> Option<T> {
    let v1 = origin - seg.a;
    let v2 = seg.b - seg.a;
    let denom = v2.cross(dir);
    if denom.abs() < T::of(1e-12) {
        return None; // parallel (collinear overlap treated as a miss)
    }
    let t = v1.cross(v2) / denom; // distance along ray
    let s = v1.cross(dir) / denom; // parameter along segment
    if t >= T::zero() && s >= T::zero() && s <= T::one() {
        Some(t)
    } else {
        None
    }
}

/// Whether the open segments (p0,p1) and (q0,q1) properly intersect or touch.
pub fn segments_intersect<T: Real>(p0: Vec2<T>, p1: Vec2<T>, q0: Vec2<T>, q1: Vec2<T>) -> bool {
    let d1 = (q1 - q0).cross(p0 - q0);
    let d2 = (q1 - q0).cross(p1 - q0);
    let d3 = (p1 - p0).cross(q0 - p0);
    let d4 = (p1 - p0).cross(q1 - p0);
    if ((d1 > T::zero() && d2 < T::zero()) || (d1 < T::zero() && d2 > T::zero()))
        && ((d3 > T::zero() && d4 < T::zero()) || (d3 < T::zero() && d4 > T::zero()))
    {
        return true;
    }
    let on = |d: T, a: Vec2<T>, b: Vec2<T>, p: Vec2<T>| {
        d == T::zero()
            && p.x >= a.x.min(b.x)
            && p.x <= a.x.max(b.x)
            && p.y >= a.y.min(b.y)
            && p.y <= a.y.max(b.y)
    };
    on(d1, q0, q1, p0) || on(d2, q0, q1, p1) || on(d3, p0, p1, q0) || on(d4, p0, p1, q1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ray_hits_perpendicular_wall() {
        let seg = Segment::new(Vec2::new(2.0, -1.0), Vec2::new(2.0, 1.0));
        let d = ray_segment_hit(Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), seg).unwrap();
        assert!((d - 2.0f64).abs() < 1e-12);
    }

    #[test]
    fn ray_misses_behind() {
        let seg = Segment::new(Vec2::new(-2.0, -1.0), Vec2::new(-2.0, 1.0));
        assert!(ray_segment_hit(Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), seg).is_none());
    }

    #[test]
    fn segment_point_distance() {
        let seg = Segment::new(Vec2::new(0.0, 0.0), Vec2::new(4.0, 0.0));
        assert!((seg.distance_to_point(Vec2::new(2.0, 3.0)) - 3.0f64).abs() < 1e-12);
        assert!((seg.distance_to_point(Vec2::new(-3.0, 4.0)) - 5.0f64).abs() < 1e-12);
    }

    #[test]
    fn crossing_segments_detected() {
        assert!(segments_intersect(
            Vec2::new(0.0, 0.0),
            Vec2::new(2.0, 2.0),
            Vec2::new(0.0, 2.0),
            Vec2::new(2.0, 0.0),
        ));
        assert!(!segments_intersect(
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(0.0, 1.0),
            Vec2::new(1.0, 1.0),
        ));
    }
}
