//! Planar shapes, segment blocking tests and ray casting.

use std::f64::consts::PI;

pub type Point = [f64; 2];

/// Axis-aligned rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub min: Point,
    pub max: Point,
}

impl Rect {
    pub const fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Rect {
            min: [x0, y0],
            max: [x1, y1],
        }
    }

    pub fn centered(c: Point, half: f64) -> Self {
        Rect::new(c[0] - half, c[1] - half, c[0] + half, c[1] + half)
    }

    pub fn contains(&self, p: Point) -> bool {
        p[0] >= self.min[0] && p[0] <= self.max[0] && p[1] >= self.min[1] && p[1] <= self.max[1]
    }

    /// Entry parameter of the ray `origin + t * dir` (t >= 0) into the
    /// rectangle, if it hits.
    fn ray_entry(&self, origin: Point, dir: Point) -> Option<f64> {
        let mut t_min = 0.0f64;
        let mut t_max = f64::INFINITY;
        for axis in 0..2 {
            if dir[axis].abs() < 1e-15 {
                if origin[axis] < self.min[axis] || origin[axis] > self.max[axis] {
                    return None;
                }
            } else {
                let t1 = (self.min[axis] - origin[axis]) / dir[axis];
                let t2 = (self.max[axis] - origin[axis]) / dir[axis];
                let (lo, hi) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
                t_min = t_min.max(lo);
                t_max = t_max.min(hi);
                if t_min > t_max {
                    return None;
                }
            }
        }
        Some(t_min)
    }

    /// Whether any point of segment `a -> b` lies in the rectangle.
    pub fn hits_segment(&self, a: Point, b: Point) -> bool {
        let dir = [b[0] - a[0], b[1] - a[1]];
        matches!(self.ray_entry(a, dir), Some(t) if t <= 1.0)
    }
}

/// Disc obstacle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle {
    pub center: Point,
    pub radius: f64,
}

impl Circle {
    pub fn contains(&self, p: Point) -> bool {
        dist(p, self.center) < self.radius
    }

    pub fn hits_segment(&self, a: Point, b: Point) -> bool {
        let d = [b[0] - a[0], b[1] - a[1]];
        let len2 = d[0] * d[0] + d[1] * d[1];
        let t = if len2 == 0.0 {
            0.0
        } else {
            (((self.center[0] - a[0]) * d[0] + (self.center[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0)
        };
        let closest = [a[0] + t * d[0], a[1] + t * d[1]];
        dist(closest, self.center) < self.radius
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Obstacle {
    Rect(Rect),
    Circle(Circle),
}

impl Obstacle {
    pub fn contains(&self, p: Point) -> bool {
        match self {
            Obstacle::Rect(r) => r.contains(p),
            Obstacle::Circle(c) => c.contains(p),
        }
    }

    pub fn hits_segment(&self, a: Point, b: Point) -> bool {
        match self {
            Obstacle::Rect(r) => r.hits_segment(a, b),
            Obstacle::Circle(c) => c.hits_segment(a, b),
        }
    }
}

/// A square map with obstacles.
#[derive(Debug, Clone, PartialEq)]
pub struct MapGeometry {
    pub bounds: Rect,
    pub obstacles: Vec<Obstacle>,
}

impl MapGeometry {
    pub fn open(bounds: Rect) -> Self {
        MapGeometry {
            bounds,
            obstacles: Vec::new(),
        }
    }

    pub fn is_free(&self, p: Point) -> bool {
        self.bounds.contains(p) && !self.obstacles.iter().any(|o| o.contains(p))
    }

    pub fn segment_blocked(&self, a: Point, b: Point) -> bool {
        self.obstacles.iter().any(|o| o.hits_segment(a, b))
    }

    pub fn clamp(&self, p: Point) -> Point {
        [
            p[0].clamp(self.bounds.min[0], self.bounds.max[0]),
            p[1].clamp(self.bounds.min[1], self.bounds.max[1]),
        ]
    }

    /// Distance from `origin` along `heading` to the first boundary or
    /// rectangular obstacle.
    pub fn ray_distance(&self, origin: Point, heading: f64) -> f64 {
        let dir = [heading.cos(), heading.sin()];
        let mut best = f64::INFINITY;
        for axis in 0..2 {
            if dir[axis] > 1e-15 {
                best = best.min((self.bounds.max[axis] - origin[axis]) / dir[axis]);
            } else if dir[axis] < -1e-15 {
                best = best.min((self.bounds.min[axis] - origin[axis]) / dir[axis]);
            }
        }
        for o in &self.obstacles {
            if let Obstacle::Rect(r) = o {
                if let Some(t) = r.ray_entry(origin, dir) {
                    best = best.min(t);
                }
            }
        }
        best.max(0.0)
    }
}

pub fn dist(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Absolute angular difference wrapped to `[0, pi]`.
pub fn angle_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

pub fn wrap_angle(a: f64) -> f64 {
    a.rem_euclid(2.0 * PI)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segment_rect() {
        let r = Rect::new(-0.1, -0.1, 0.1, 0.1);
        assert!(r.hits_segment([-1.0, 0.0], [1.0, 0.0]));
        assert!(!r.hits_segment([-1.0, 0.5], [1.0, 0.5]));
        assert!(!r.hits_segment([-1.0, 0.0], [-0.5, 0.0]));
        assert!(r.hits_segment([0.0, 0.0], [0.0, 0.0]));
        assert!(r.hits_segment([0.5, 0.05], [0.05, 0.05]));
    }

    #[test]
    fn segment_circle() {
        let c = Circle {
            center: [0.0, 0.0],
            radius: 0.4,
        };
        assert!(c.hits_segment([-0.5, 0.0], [0.5, 0.0]));
        assert!(c.hits_segment([0.42, 0.0], [0.37, 0.0]));
        assert!(!c.hits_segment([0.45, 0.0], [0.5, 0.0]));
        assert!(!c.hits_segment([-0.5, 0.45], [0.5, 0.45]));
    }

    #[test]
    fn angle_wrap() {
        assert!((angle_diff(0.0, 2.0 * PI - 0.1) - 0.1).abs() < 1e-12);
        assert!((angle_diff(0.0, PI) - PI).abs() < 1e-12);
        assert!((angle_diff(3.0, -3.0) - (2.0 * PI - 6.0)).abs() < 1e-12);
    }
}
