//! Planar primitives: points, the signed affine area determinant and the
//! collinearity tests built on it.

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of the plane. Coordinates are always finite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPoint")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

#[derive(Deserialize)]
struct RawPoint {
    x: f64,
    y: f64,
}

impl TryFrom<RawPoint> for Point {
    type Error = Error;

    fn try_from(raw: RawPoint) -> Result<Self> {
        Point::try_new(raw.x, raw.y)
    }
}

impl Point {
    /// Panics on non-finite input; use [`Point::try_new`] for untrusted data.
    pub fn new(x: f64, y: f64) -> Self {
        assert!(x.is_finite() && y.is_finite(), "non-finite point ({x}, {y})");
        Self { x, y }
    }

    pub fn try_new(x: f64, y: f64) -> Result<Self> {
        if x.is_finite() && y.is_finite() {
            Ok(Self { x, y })
        } else {
            Err(Error::NonFinite { x, y })
        }
    }

    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Point) -> f64 {
        (self - other).norm()
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        Point { x: self.x + rhs.x, y: self.y + rhs.y }
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        Point { x: self.x - rhs.x, y: self.y - rhs.y }
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point { x: self.x * s, y: self.y * s }
    }
}

/// Relative threshold for degeneracy tests.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub rel_eps: f64,
}

impl Tolerance {
    pub const DEFAULT_REL_EPS: f64 = 1e-9;

    pub fn new(rel_eps: f64) -> Result<Self> {
        if rel_eps > 0.0 && rel_eps < 1e-3 {
            Ok(Self { rel_eps })
        } else {
            Err(Error::InvalidTolerance(rel_eps))
        }
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { rel_eps: Self::DEFAULT_REL_EPS }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    Ccw,
    Cw,
    Collinear,
}

/// Determinant of `[[1, a], [1, b], [1, c]]`, i.e. twice the signed area of
/// the triangle `abc`. Evaluated as the cross product `(b - a) x (c - a)`.
pub fn affine_area_f(a: Point, b: Point, c: Point) -> f64 {
    (b - a).cross(c - a)
}

/// Largest coordinate extent of a point set.
pub fn coordinate_span(points: &[Point]) -> f64 {
    let mut span: f64 = 0.0;
    for p in points {
        for q in points {
            span = span.max((p.x - q.x).abs()).max((p.y - q.y).abs());
        }
    }
    span
}

pub fn orientation(a: Point, b: Point, c: Point, tol: Tolerance) -> Orientation {
    let f = affine_area_f(a, b, c);
    let span = coordinate_span(&[a, b, c]);
    if f.abs() <= tol.rel_eps * span * span {
        Orientation::Collinear
    } else if f > 0.0 {
        Orientation::Ccw
    } else {
        Orientation::Cw
    }
}

/// Returns the first collinear triple (by index), if any.
pub fn find_collinear_triple(points: &[Point], tol: Tolerance) -> Option<[usize; 3]> {
    let n = points.len();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                if orientation(points[i], points[j], points[k], tol) == Orientation::Collinear {
                    return Some([i, j, k]);
                }
            }
        }
    }
    None
}

/// True iff no three of the points are collinear.
pub fn is_general_position(points: &[Point], tol: Tolerance) -> bool {
    find_collinear_triple(points, tol).is_none()
}

/// Strict containment of `p` in triangle `abc` (either orientation).
pub fn strictly_inside_triangle(p: Point, a: Point, b: Point, c: Point, tol: Tolerance) -> bool {
    let o1 = orientation(a, b, p, tol);
    let o2 = orientation(b, c, p, tol);
    let o3 = orientation(c, a, p, tol);
    o1 != Orientation::Collinear && o1 == o2 && o2 == o3
}

/// Signed polygon area (positive for counter-clockwise vertex order).
pub fn polygon_area(points: &[Point]) -> f64 {
    let n = points.len();
    (0..n)
        .map(|i| points[i].cross(points[(i + 1) % n]))
        .sum::<f64>()
        / 2.0
}

/// Even-odd point-in-polygon test.
pub fn point_in_polygon(p: Point, polygon: &[Point]) -> bool {
    let n = polygon.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (polygon[i], polygon[j]);
        if (a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x {
            inside = !inside;
        }
        j = i;
    }
    inside
}

/// Proper or touching intersection of closed segments `ab` and `cd`.
pub fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let d1 = affine_area_f(c, d, a);
    let d2 = affine_area_f(c, d, b);
    let d3 = affine_area_f(a, b, c);
    let d4 = affine_area_f(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on_segment = |p: Point, q: Point, r: Point| {
        r.x >= p.x.min(q.x) && r.x <= p.x.max(q.x) && r.y >= p.y.min(q.y) && r.y <= p.y.max(q.y)
    };
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}
