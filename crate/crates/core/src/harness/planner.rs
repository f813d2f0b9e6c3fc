//! Shortest-path oracle on a square discretisation of a planar map.

use std::collections::VecDeque;

use crate::env::geometry::{dist, MapGeometry, Point};
use crate::env::POINT_STEP;

/// Cells per side used for the four-room oracle.
pub const PLANNER_CELLS: usize = 48;

const MOVES: [Point; 5] = [[0.0, 0.0], [0.0, 1.0], [0.0, -1.0], [-1.0, 0.0], [1.0, 0.0]];

/// BFS over free cell centres; neighbours are 4-connected when the segment
/// between their centres is unobstructed.
#[derive(Debug, Clone)]
pub struct GridPlanner {
    geometry: MapGeometry,
    n: usize,
    free: Vec<bool>,
}

impl GridPlanner {
    pub fn new(geometry: MapGeometry, n: usize) -> Self {
        let mut p = GridPlanner {
            free: Vec::new(),
            geometry,
            n,
        };
        p.free = (0..n * n).map(|c| p.geometry.is_free(p.center(c))).collect();
        p
    }

    pub fn cells(&self) -> usize {
        self.n
    }

    fn size(&self, axis: usize) -> f64 {
        (self.geometry.bounds.max[axis] - self.geometry.bounds.min[axis]) / self.n as f64
    }

    pub fn center(&self, c: usize) -> Point {
        let (i, j) = (c % self.n, c / self.n);
        [
            self.geometry.bounds.min[0] + (i as f64 + 0.5) * self.size(0),
            self.geometry.bounds.min[1] + (j as f64 + 0.5) * self.size(1),
        ]
    }

    fn index_of(&self, p: Point) -> (isize, isize) {
        let b = &self.geometry.bounds;
        (
            ((p[0] - b.min[0]) / self.size(0)).floor() as isize,
            ((p[1] - b.min[1]) / self.size(1)).floor() as isize,
        )
    }

    fn neighbours(&self, c: usize) -> impl Iterator<Item = usize> + '_ {
        let (i, j) = ((c % self.n) as isize, (c / self.n) as isize);
        [(1, 0), (-1, 0), (0, 1), (0, -1)].into_iter().filter_map(move |(di, dj)| {
            let (a, b) = (i + di, j + dj);
            if a < 0 || b < 0 || a >= self.n as isize || b >= self.n as isize {
                return None;
            }
            let d = b as usize * self.n + a as usize;
            (self.free[d] && !self.geometry.segment_blocked(self.center(c), self.center(d))).then_some(d)
        })
    }

    /// Free cells in the 3x3 block around `p` that `p` can see, with the
    /// straight-line distance to their centres.
    fn anchors(&self, p: Point) -> Vec<(usize, f64)> {
        let (i, j) = self.index_of(p);
        let mut out = Vec::new();
        for dj in -1..=1 {
            for di in -1..=1 {
                let (a, b) = (i + di, j + dj);
                if a < 0 || b < 0 || a >= self.n as isize || b >= self.n as isize {
                    continue;
                }
                let c = b as usize * self.n + a as usize;
                if self.free[c] && !self.geometry.segment_blocked(p, self.center(c)) {
                    out.push((c, dist(p, self.center(c))));
                }
            }
        }
        out
    }

    /// BFS step counts from every cell to the cells anchoring `goal`.
    pub fn distance_field(&self, goal: Point) -> Vec<Option<u32>> {
        let mut field = vec![None; self.n * self.n];
        let mut queue = VecDeque::new();
        if let Some((c, _)) = self.anchors(goal).into_iter().min_by(|a, b| a.1.total_cmp(&b.1)) {
            field[c] = Some(0);
            queue.push_back(c);
        }
        while let Some(c) = queue.pop_front() {
            let d = field[c].expect("queued cells are labelled");
            for nb in self.neighbours(c).collect::<Vec<_>>() {
                if field[nb].is_none() {
                    field[nb] = Some(d + 1);
                    queue.push_back(nb);
                }
            }
        }
        field
    }

    /// Remaining path length from `p` in cell units; `None` if cut off.
    pub fn cost(&self, field: &[Option<u32>], p: Point, goal: Point) -> Option<f64> {
        let cell = self.size(0);
        if dist(p, goal) <= cell && !self.geometry.segment_blocked(p, goal) {
            return Some(dist(p, goal) / cell);
        }
        self.anchors(p)
            .into_iter()
            .filter_map(|(c, d)| field[c].map(|steps| steps as f64 + 1.0 + d / cell))
            .reduce(f64::min)
    }

    /// Point to steer toward from `p`: the goal once `p` is anchored to the
    /// goal cell, otherwise the centre of the next cell on the shortest path
    /// from the best visible anchor.
    pub fn waypoint(&self, field: &[Option<u32>], p: Point, goal: Point) -> Option<Point> {
        let cell = self.size(0);
        let (c, steps) = self
            .anchors(p)
            .into_iter()
            .filter_map(|(c, d)| field[c].map(|s| (c, s, s as f64 + d / cell)))
            .min_by(|a, b| a.2.total_cmp(&b.2))
            .map(|(c, s, _)| (c, s))?;
        if steps == 0 {
            return Some(goal);
        }
        let next = self
            .neighbours(c)
            .find(|&nb| field[nb] == Some(steps - 1))
            .expect("BFS labels have a predecessor");
        Some(self.center(next))
    }

    /// Action (0 stay, 1 up, 2 down, 3 left, 4 right) whose noise-free
    /// outcome lands closest to the waypoint; staying is only considered
    /// when steering at the goal itself. Ties go to the lowest index.
    pub fn action(&self, field: &[Option<u32>], p: Point, goal: Point) -> usize {
        let Some(target) = self.waypoint(field, p, goal) else {
            return 0;
        };
        let at_goal = target == goal;
        let mut best = (0, f64::INFINITY);
        for (a, d) in MOVES.iter().enumerate() {
            if a == 0 && !at_goal {
                continue;
            }
            let moved = self.geometry.clamp([p[0] + POINT_STEP * d[0], p[1] + POINT_STEP * d[1]]);
            if a != 0 && self.geometry.segment_blocked(p, moved) {
                continue;
            }
            let c = dist(moved, target);
            if c < best.1 {
                best = (a, c);
            }
        }
        best.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{four_room_geometry, EnvKind, EnvSpec};
    use crate::env::geometry::Rect;

    #[test]
    fn open_map_field_is_manhattan() {
        let p = GridPlanner::new(MapGeometry::open(Rect::new(0.0, 0.0, 1.0, 1.0)), 10);
        let field = p.distance_field([0.04, 0.06]);
        for c in 0..100 {
            let (i, j) = (c % 10, c / 10);
            assert_eq!(field[c], Some((i + j) as u32), "cell {c}");
        }
    }

    #[test]
    fn four_room_walls_split_cells_and_doors_connect() {
        let g = four_room_geometry();
        let p = GridPlanner::new(g.clone(), PLANNER_CELLS);
        let field = p.distance_field([-0.6, -0.6]);
        // every free cell is reachable through the doors
        let free_unreached = (0..PLANNER_CELLS * PLANNER_CELLS).filter(|&c| p.free[c] && field[c].is_none()).count();
        assert_eq!(free_unreached, 0);
        // the opposite room is much farther than its straight-line distance
        let near = p.cost(&field, [0.6, -0.6], [-0.6, -0.6]).unwrap();
        let far = p.cost(&field, [0.6, 0.6], [-0.6, -0.6]).unwrap();
        assert!(near >= 20.0 && far > near + 10.0, "{near} {far}");
        assert!(EnvSpec::new(EnvKind::FourRoom).geometry() == g);
    }

    #[test]
    fn noise_free_plan_reaches_goal() {
        let g = four_room_geometry();
        let p = GridPlanner::new(g.clone(), PLANNER_CELLS);
        for (start, goal) in [([-0.9, -0.9], [0.9, 0.9]), ([0.7, -0.2], [-0.3, 0.9]), ([-0.1, 0.1], [0.1, -0.1])] {
            let field = p.distance_field(goal);
            let mut s: Point = start;
            for _ in 0..200 {
                let d = MOVES[p.action(&field, s, goal)];
                let moved = g.clamp([s[0] + POINT_STEP * d[0], s[1] + POINT_STEP * d[1]]);
                if !g.segment_blocked(s, moved) {
                    s = moved;
                }
            }
            assert!(dist(s, goal) <= 0.05, "{start:?} -> {goal:?} ended at {s:?}");
        }
    }
}
