//! Planar geometry for the synthetic map: points, axis-aligned obstacle
//! rectangles and road polylines.

use alloc::vec::Vec;

use crate::math;

/// A point (or vector) in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Point {
    /// x coordinate.
    pub x: f64,
    /// y coordinate.
    pub y: f64,
}

impl core::ops::Sub for Point {
    type Output = Point;

    fn sub(self, other: Point) -> Point {
        Point::new(self.x - other.x, self.y - other.y)
    }
}

impl Point {
    /// New point.
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    /// Euclidean distance.
    pub fn dist(self, other: Point) -> f64 {
        math::hypot(self.x - other.x, self.y - other.y)
    }

    /// Euclidean norm of the point viewed as a vector.
    pub fn norm(self) -> f64 {
        math::hypot(self.x, self.y)
    }

    /// `self + other * s`.
    pub fn add_scaled(self, other: Point, s: f64) -> Point {
        Point::new(self.x + other.x * s, self.y + other.y * s)
    }

    /// 2-D cross product `self × other`.
    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    /// Dot product.
    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }
}

/// Axis-aligned rectangle, used for buildings.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Rect {
    /// Lower-left corner.
    pub min: Point,
    /// Upper-right corner.
    pub max: Point,
}

impl Rect {
    /// Rectangle from two opposite corners in any order.
    pub fn new(a: Point, b: Point) -> Self {
        Rect {
            min: Point::new(a.x.min(b.x), a.y.min(b.y)),
            max: Point::new(a.x.max(b.x), a.y.max(b.y)),
        }
    }

    /// Closed containment test.
    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    /// Whether the closed segment `a`–`b` touches the rectangle
    /// (Liang–Barsky clipping).
    pub fn intersects_segment(&self, a: Point, b: Point) -> bool {
        let d = b - a;
        let mut t0 = 0.0_f64;
        let mut t1 = 1.0_f64;
        let checks = [
            (-d.x, a.x - self.min.x),
            (d.x, self.max.x - a.x),
            (-d.y, a.y - self.min.y),
            (d.y, self.max.y - a.y),
        ];
        for (p, q) in checks {
            if p == 0.0 {
                if q < 0.0 {
                    return false;
                }
            } else {
                let r = q / p;
                if p < 0.0 {
                    if r > t1 {
                        return false;
                    }
                    if r > t0 {
                        t0 = r;
                    }
                } else {
                    if r < t0 {
                        return false;
                    }
                    if r < t1 {
                        t1 = r;
                    }
                }
            }
        }
        t0 <= t1
    }
}

/// Line of sight between `a` and `b` given a set of obstacles.
pub fn line_of_sight(a: Point, b: Point, obstacles: &[Rect]) -> bool {
    !obstacles.iter().any(|r| r.intersects_segment(a, b))
}

/// A road as an open polyline traversed from the first vertex to the last.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Polyline {
    points: Vec<Point>,
    cumulative: Vec<f64>,
}

impl Polyline {
    /// Builds a polyline; needs at least two vertices.
    pub fn new(points: Vec<Point>) -> Option<Self> {
        if points.len() < 2 {
            return None;
        }
        let mut cumulative = Vec::with_capacity(points.len());
        cumulative.push(0.0);
        for w in points.windows(2) {
            let last = *cumulative.last().unwrap();
            cumulative.push(last + w[0].dist(w[1]));
        }
        if *cumulative.last().unwrap() <= 0.0 {
            return None;
        }
        Some(Polyline { points, cumulative })
    }

    /// Vertices.
    pub fn points(&self) -> &[Point] {
        &self.points
    }

    /// Total length in meters.
    pub fn length(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    /// The same road traversed the other way.
    pub fn reversed(&self) -> Self {
        let mut pts = self.points.clone();
        pts.reverse();
        Polyline::new(pts).expect("reversal keeps a valid polyline")
    }

    fn segment_at(&self, s: f64) -> usize {
        // last segment whose start is <= s
        let idx = self.cumulative.partition_point(|&c| c <= s);
        idx.clamp(1, self.points.len() - 1) - 1
    }

    /// Position after travelling `s` meters (clamped to the ends).
    pub fn point_at(&self, s: f64) -> Point {
        let s = s.clamp(0.0, self.length());
        let i = self.segment_at(s);
        let seg_len = self.cumulative[i + 1] - self.cumulative[i];
        if seg_len <= 0.0 {
            return self.points[i];
        }
        let f = (s - self.cumulative[i]) / seg_len;
        let d = self.points[i + 1] - self.points[i];
        self.points[i].add_scaled(d, f)
    }

    /// Unit heading at arc length `s`.
    pub fn heading_at(&self, s: f64) -> Point {
        let s = s.clamp(0.0, self.length());
        let i = self.segment_at(s);
        let d = self.points[i + 1] - self.points[i];
        let n = d.norm();
        if n > 0.0 {
            Point::new(d.x / n, d.y / n)
        } else {
            Point::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segment_through_rectangle() {
        let r = Rect::new(Point::new(-1.0, -1.0), Point::new(1.0, 1.0));
        assert!(r.intersects_segment(Point::new(-5.0, 0.0), Point::new(5.0, 0.0)));
        assert!(!r.intersects_segment(Point::new(-5.0, 2.0), Point::new(5.0, 2.0)));
        // stops short
        assert!(!r.intersects_segment(Point::new(-5.0, 0.0), Point::new(-2.0, 0.0)));
        // endpoint inside
        assert!(r.intersects_segment(Point::new(0.0, 0.0), Point::new(9.0, 9.0)));
        // diagonal that clips a corner
        assert!(!r.intersects_segment(Point::new(0.0, 3.0), Point::new(3.0, 0.0)));
        assert!(r.intersects_segment(Point::new(0.0, 1.5), Point::new(1.5, 0.0)));
    }

    #[test]
    fn polyline_walk() {
        let p = Polyline::new(alloc::vec![
            Point::new(0.0, 0.0),
            Point::new(10.0, 0.0),
            Point::new(10.0, 10.0)
        ])
        .unwrap();
        assert_eq!(p.length(), 20.0);
        assert_eq!(p.point_at(5.0), Point::new(5.0, 0.0));
        assert_eq!(p.point_at(15.0), Point::new(10.0, 5.0));
        assert_eq!(p.point_at(99.0), Point::new(10.0, 10.0));
        assert_eq!(p.heading_at(12.0), Point::new(0.0, 1.0));
        assert_eq!(p.reversed().point_at(0.0), Point::new(10.0, 10.0));
        assert!(Polyline::new(alloc::vec![Point::new(1.0, 1.0)]).is_none());
    }
}
