//! Planar geometry used by the library validator and the placement solver.
//!
//! All coordinates are meters in the map frame; headings are radians,
//! counter-clockwise from the +x axis.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Tolerance used for orientation and parameter tests.
pub const EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl From<[f64; 2]> for Point2 {
    fn from([x, y]: [f64; 2]) -> Self {
        Self { x, y }
    }
}

impl From<Point2> for [f64; 2] {
    fn from(p: Point2) -> Self {
        [p.x, p.y]
    }
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }

    pub fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }

    pub fn scale(self, k: f64) -> Point2 {
        Point2::new(self.x * k, self.y * k)
    }

    pub fn dot(self, o: Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Point2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, o: Point2) -> f64 {
        self.sub(o).norm()
    }

    pub fn lerp(self, o: Point2, t: f64) -> Point2 {
        self.add(o.sub(self).scale(t))
    }

    /// Rotates the point by `angle` about `center`.
    pub fn rotate_about(self, center: Point2, angle: f64) -> Point2 {
        let (s, c) = angle.sin_cos();
        let d = self.sub(center);
        Point2::new(center.x + d.x * c - d.y * s, center.y + d.x * s + d.y * c)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Position and heading in the map frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pose2 {
    pub position: Point2,
    /// Radians, counter-clockwise from +x.
    pub heading: f64,
}

impl Pose2 {
    pub fn is_finite(&self) -> bool {
        self.position.is_finite() && self.heading.is_finite()
    }
}

/// A point in the 2.5D scene model: plan position plus height above floor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn from_plan(p: Point2, z: f64) -> Self {
        Self::new(p.x, p.y, z)
    }

    pub fn plan(self) -> Point2 {
        Point2::new(self.x, self.y)
    }

    pub fn distance(self, o: Point3) -> f64 {
        let (dx, dy, dz) = (self.x - o.x, self.y - o.y, self.z - o.z);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }
}

/// Wraps an angle into `[-PI, PI]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut r = (a + PI).rem_euclid(2.0 * PI) - PI;
    // rem_euclid maps PI to -PI; keep the positive representative for a
    // left-hand half turn so that `wrap_angle(PI) == PI`.
    if r == -PI && a > 0.0 {
        r = PI;
    }
    r
}

/// Twice the signed area of triangle `abc` (positive when counter-clockwise).
pub fn orient(a: Point2, b: Point2, c: Point2) -> f64 {
    b.sub(a).cross(c.sub(a))
}

fn sign(v: f64) -> i8 {
    if v > EPS {
        1
    } else if v < -EPS {
        -1
    } else {
        0
    }
}

fn on_segment(a: Point2, b: Point2, p: Point2) -> bool {
    p.x >= a.x.min(b.x) - EPS
        && p.x <= a.x.max(b.x) + EPS
        && p.y >= a.y.min(b.y) - EPS
        && p.y <= a.y.max(b.y) + EPS
}

/// Closed segment intersection test, including touching and collinear overlap.
pub fn segments_intersect(a: Point2, b: Point2, c: Point2, d: Point2) -> bool {
    let o1 = sign(orient(a, b, c));
    let o2 = sign(orient(a, b, d));
    let o3 = sign(orient(c, d, a));
    let o4 = sign(orient(c, d, b));
    if o1 * o2 < 0 && o3 * o4 < 0 {
        return true;
    }
    (o1 == 0 && on_segment(a, b, c))
        || (o2 == 0 && on_segment(a, b, d))
        || (o3 == 0 && on_segment(c, d, a))
        || (o4 == 0 && on_segment(c, d, b))
}

/// A simple polygon given by its vertices in order (either winding).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Polygon(pub Vec<Point2>);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PolygonError {
    #[error("polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("polygon has a non-finite coordinate")]
    NonFinite,
    #[error("polygon has zero area")]
    Degenerate,
    #[error("polygon edges {0} and {1} intersect")]
    SelfIntersecting(usize, usize),
    #[error("polygon is not convex")]
    NotConvex,
}

impl Polygon {
    pub fn vertices(&self) -> &[Point2] {
        &self.0
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        let n = self.0.len();
        (0..n).map(move |i| (self.0[i], self.0[(i + 1) % n]))
    }

    pub fn signed_area(&self) -> f64 {
        self.edges().map(|(a, b)| a.cross(b)).sum::<f64>() / 2.0
    }

    /// Checks vertex count, finiteness, non-zero area and that no two
    /// non-adjacent edges touch.
    pub fn validate_simple(&self) -> Result<(), PolygonError> {
        let n = self.0.len();
        if n < 3 {
            return Err(PolygonError::TooFewVertices(n));
        }
        if !self.0.iter().all(|p| p.is_finite()) {
            return Err(PolygonError::NonFinite);
        }
        let edges: Vec<_> = self.edges().collect();
        for i in 0..n {
            for j in (i + 1)..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if adjacent {
                    continue;
                }
                let (a, b) = edges[i];
                let (c, d) = edges[j];
                if segments_intersect(a, b, c, d) {
                    return Err(PolygonError::SelfIntersecting(i, j));
                }
            }
        }
        if self.signed_area().abs() <= EPS {
            return Err(PolygonError::Degenerate);
        }
        Ok(())
    }

    pub fn validate_convex(&self) -> Result<(), PolygonError> {
        self.validate_simple()?;
        let n = self.0.len();
        let mut turn = 0i8;
        for i in 0..n {
            let s = sign(orient(self.0[i], self.0[(i + 1) % n], self.0[(i + 2) % n]));
            if s == 0 {
                continue;
            }
            if turn == 0 {
                turn = s;
            } else if s != turn {
                return Err(PolygonError::NotConvex);
            }
        }
        Ok(())
    }

    /// Point-in-polygon by ray casting. Boundary points are reported as inside.
    pub fn contains(&self, p: Point2) -> bool {
        if self
            .edges()
            .any(|(a, b)| sign(orient(a, b, p)) == 0 && on_segment(a, b, p))
        {
            return true;
        }
        let mut inside = false;
        for (a, b) in self.edges() {
            if (a.y > p.y) != (b.y > p.y) {
                let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
                if p.x < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Rotates every vertex by `angle` about `center`.
    pub fn rotated_about(&self, center: Point2, angle: f64) -> Polygon {
        Polygon(self.0.iter().map(|p| p.rotate_about(center, angle)).collect())
    }
}

/// True iff the open segment `pq` touches the interior or boundary of any
/// obstacle polygon.
pub fn occluded(p: Point2, q: Point2, obstacles: &[Polygon]) -> bool {
    obstacles.iter().any(|poly| open_segment_hits(p, q, poly))
}

fn open_segment_hits(p: Point2, q: Point2, poly: &Polygon) -> bool {
    let d = q.sub(p);
    let len2 = d.dot(d);
    if len2 <= EPS * EPS {
        // The open segment of a degenerate pair is empty.
        return false;
    }
    for (a, b) in poly.edges() {
        let e = b.sub(a);
        let denom = d.cross(e);
        let ap = a.sub(p);
        if denom.abs() <= EPS {
            // Parallel; only collinear edges matter.
            if ap.cross(d).abs() > EPS * d.norm().max(1.0) {
                continue;
            }
            let ta = ap.dot(d) / len2;
            let tb = b.sub(p).dot(d) / len2;
            let (lo, hi) = (ta.min(tb), ta.max(tb));
            if hi > EPS && lo < 1.0 - EPS {
                return true;
            }
            continue;
        }
        let t = ap.cross(e) / denom;
        let u = ap.cross(d) / denom;
        if (-EPS..=1.0 + EPS).contains(&u) && t > EPS && t < 1.0 - EPS {
            return true;
        }
    }
    // No boundary contact strictly inside (0,1): the open segment is either
    // wholly inside or wholly outside. Boundary contact exactly at an
    // endpoint does not count, so probe the midpoint.
    poly.contains(p.lerp(q, 0.5))
}
