//! 64-beam LiDAR over a 200 x 200 map with rectangular obstacles.

use std::f64::consts::PI;

use super::geometry::{MapGeometry, Obstacle, Rect};
use crate::error::{Error, Result};

pub const MAP_SIZE: f64 = 200.0;
pub const RAYS: usize = 64;
/// Translation per forward/backward action.
pub const MOVE_STEP: f64 = 10.0;
/// Rotation per turn action.
pub const TURN_STEP: f64 = PI / 2.0;

/// Centers of the four square obstacles; each is 40 x 40.
pub const OBSTACLE_CENTERS: [[f64; 2]; 4] = [[60.0, 60.0], [140.0, 60.0], [60.0, 140.0], [140.0, 140.0]];
pub const OBSTACLE_HALF_SIDE: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    /// Radians in `[0, 2 pi)`.
    pub heading: f64,
}

pub fn default_map() -> MapGeometry {
    MapGeometry {
        bounds: Rect::new(0.0, 0.0, MAP_SIZE, MAP_SIZE),
        obstacles: OBSTACLE_CENTERS
            .iter()
            .map(|&c| Obstacle::Rect(Rect::centered(c, OBSTACLE_HALF_SIDE)))
            .collect(),
    }
}

/// Ray `k` is cast at `heading + k * 2 pi / 64`.
pub fn raycast(map: &MapGeometry, pose: Pose) -> Result<Vec<f64>> {
    let p = [pose.x, pose.y];
    if !map.bounds.contains(p)
        || map
            .obstacles
            .iter()
            .any(|o| o.contains(p) && !on_boundary(o, p))
    {
        return Err(Error::PoseInsideGeometry {
            x: pose.x,
            y: pose.y,
        });
    }
    Ok((0..RAYS)
        .map(|k| map.ray_distance(p, pose.heading + k as f64 * 2.0 * PI / RAYS as f64))
        .collect())
}

fn on_boundary(o: &Obstacle, p: [f64; 2]) -> bool {
    match o {
        Obstacle::Rect(r) => {
            p[0] == r.min[0] || p[0] == r.max[0] || p[1] == r.min[1] || p[1] == r.max[1]
        }
        Obstacle::Circle(_) => false,
    }
}
