//! Similarity grids over the free space of a planar map.
//!
//! File layout (plain text):
//!
//! ```text
//! kind=p_phi
//! env=four_room
//! reference=-0.6,0.1
//! bounds=-1.2,-1.2,1.2,1.2
//! resolution=48,48
//! 0.91,0.88,NA,...
//! ```
//!
//! followed by `ny` rows of `nx` comma-separated values. Row 0 is the
//! lowest `y`, column 0 the lowest `x`; values are taken at cell centres and
//! cells whose centre is blocked hold `NA`.

use crate::distance::{DistanceKind, DistanceMeasure};
use crate::env::geometry::{MapGeometry, Point, Rect};
use crate::env::lidar::Pose;
use crate::env::{observe_state, EnvKind, EnvSpec, State};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapGrid {
    pub kind: DistanceKind,
    pub env: EnvKind,
    pub reference: Point,
    pub bounds: Rect,
    pub nx: usize,
    pub ny: usize,
    /// Row-major, `None` for blocked cells.
    pub values: Vec<Option<f64>>,
}

impl HeatmapGrid {
    pub fn cell_center(&self, i: usize, j: usize) -> Point {
        cell_center(&self.bounds, self.nx, self.ny, i, j)
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.values[j * self.nx + i]
    }

    /// Cell containing `p`, if inside the bounds.
    pub fn cell_of(&self, p: Point) -> Option<(usize, usize)> {
        if !self.bounds.contains(p) {
            return None;
        }
        let fx = (p[0] - self.bounds.min[0]) / (self.bounds.max[0] - self.bounds.min[0]);
        let fy = (p[1] - self.bounds.min[1]) / (self.bounds.max[1] - self.bounds.min[1]);
        let i = ((fx * self.nx as f64) as usize).min(self.nx - 1);
        let j = ((fy * self.ny as f64) as usize).min(self.ny - 1);
        Some((i, j))
    }

    pub fn max_value(&self) -> Option<f64> {
        self.values.iter().flatten().copied().reduce(f64::max)
    }
}

fn cell_center(b: &Rect, nx: usize, ny: usize, i: usize, j: usize) -> Point {
    [
        b.min[0] + (i as f64 + 0.5) * (b.max[0] - b.min[0]) / nx as f64,
        b.min[1] + (j as f64 + 0.5) * (b.max[1] - b.min[1]) / ny as f64,
    ]
}

/// Observation of an agent standing at `p` (at rest, heading 0).
pub fn planar_observation(spec: &EnvSpec, geometry: &MapGeometry, p: Point) -> Result<Vec<f64>> {
    let state = match spec.kind {
        EnvKind::PointMass | EnvKind::PointMassBias | EnvKind::PointMassObstacle | EnvKind::FourRoom => {
            State::Point(p)
        }
        EnvKind::CarPoint | EnvKind::CarFourRoom => State::Car { pos: p, vel: [0.0, 0.0] },
        EnvKind::Lidar => State::Lidar(Pose { x: p[0], y: p[1], heading: 0.0 }),
        EnvKind::ObjectPush => {
            return Err(Error::Config("object_push has no single planar position".into()));
        }
    };
    Ok(observe_state(geometry, &state))
}

/// Similarity of every free cell to `reference`.
pub fn export_heatmap(measure: &DistanceMeasure, env: EnvKind, reference: Point, nx: usize, ny: usize) -> Result<HeatmapGrid> {
    if nx == 0 || ny == 0 {
        return Err(Error::Config("heatmap resolution must be positive".into()));
    }
    let spec = EnvSpec::new(env);
    let geometry = spec.geometry();
    if !geometry.is_free(reference) {
        return Err(Error::PoseInsideGeometry {
            x: reference[0],
            y: reference[1],
        });
    }
    let reference_obs = planar_observation(&spec, &geometry, reference)?;
    let mut free = Vec::new();
    let mut probes = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let c = cell_center(&geometry.bounds, nx, ny, i, j);
            if geometry.is_free(c) {
                free.push(j * nx + i);
                probes.push(planar_observation(&spec, &geometry, c)?);
            }
        }
    }
    let sims = measure.similarity_to(&reference_obs, &probes)?;
    let mut values = vec![None; nx * ny];
    for (idx, v) in free.into_iter().zip(sims) {
        values[idx] = Some(v);
    }
    Ok(HeatmapGrid {
        kind: measure.kind(),
        env,
        reference,
        bounds: geometry.bounds,
        nx,
        ny,
        values,
    })
}

pub fn write_heatmap(grid: &HeatmapGrid) -> String {
    let b = &grid.bounds;
    let mut out = format!(
        "kind={}\nenv={}\nreference={},{}\nbounds={},{},{},{}\nresolution={},{}\n",
        grid.kind, grid.env, grid.reference[0], grid.reference[1], b.min[0], b.min[1], b.max[0], b.max[1], grid.nx, grid.ny
    );
    for row in grid.values.chunks(grid.nx) {
        let cells: Vec<String> = row
            .iter()
            .map(|v| v.map_or_else(|| "NA".to_string(), |x| x.to_string()))
            .collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn header<'a>(lines: &mut impl Iterator<Item = (usize, &'a str)>, key: &str) -> Result<(usize, &'a str)> {
    let (k, line) = lines.next().ok_or_else(|| Error::parse(0, format!("missing `{key}`")))?;
    let ln = k + 1;
    match line.split_once('=') {
        Some((name, value)) if name == key => Ok((ln, value)),
        _ => Err(Error::parse(ln, format!("expected `{key}=`"))),
    }
}

fn floats(ln: usize, s: &str, n: usize) -> Result<Vec<f64>> {
    let v = s
        .split(',')
        .map(|x| x.parse::<f64>().ok().filter(|f| f.is_finite()))
        .collect::<Option<Vec<f64>>>()
        .ok_or_else(|| Error::parse(ln, "bad number"))?;
    if v.len() != n {
        return Err(Error::parse(ln, format!("expected {n} numbers")));
    }
    Ok(v)
}

/// Largest accepted `nx * ny`.
pub const MAX_CELLS: usize = 1 << 22;

pub fn parse_heatmap(text: &str) -> Result<HeatmapGrid> {
    let mut lines = text.lines().enumerate();
    let (ln, kind) = header(&mut lines, "kind")?;
    let kind: DistanceKind = kind.parse().map_err(|e: Error| Error::parse(ln, e.to_string()))?;
    let (ln, env) = header(&mut lines, "env")?;
    let env: EnvKind = env.parse().map_err(|e: Error| Error::parse(ln, e.to_string()))?;
    let (ln, r) = header(&mut lines, "reference")?;
    let r = floats(ln, r, 2)?;
    let (ln, b) = header(&mut lines, "bounds")?;
    let b = floats(ln, b, 4)?;
    if !(b[0] < b[2] && b[1] < b[3]) {
        return Err(Error::parse(ln, "empty bounds"));
    }
    let (ln, res) = header(&mut lines, "resolution")?;
    let res: Vec<usize> = res
        .split(',')
        .map(|x| x.parse().ok())
        .collect::<Option<_>>()
        .filter(|v: &Vec<usize>| v.len() == 2 && v[0] > 0 && v[1] > 0)
        .ok_or_else(|| Error::parse(ln, "bad resolution"))?;
    let (nx, ny) = (res[0], res[1]);
    if nx.checked_mul(ny).is_none_or(|c| c > MAX_CELLS) {
        return Err(Error::parse(ln, "grid too large"));
    }
    let mut values = Vec::with_capacity(nx * ny);
    let mut rows = 0;
    for (k, line) in lines {
        let ln = k + 1;
        if line.is_empty() {
            continue;
        }
        if rows == ny {
            return Err(Error::parse(ln, "more rows than the resolution"));
        }
        let before = values.len();
        for cell in line.split(',') {
            if cell == "NA" {
                values.push(None);
                continue;
            }
            match cell.parse::<f64>() {
                Ok(v) if (0.0..=1.0).contains(&v) => values.push(Some(v)),
                _ => return Err(Error::parse(ln, format!("bad cell `{cell}`"))),
            }
        }
        if values.len() - before != nx {
            return Err(Error::parse(ln, format!("expected {nx} cells")));
        }
        rows += 1;
    }
    if rows != ny {
        return Err(Error::parse(text.lines().count(), format!("expected {ny} rows, got {rows}")));
    }
    Ok(HeatmapGrid {
        kind,
        env,
        reference: [r[0], r[1]],
        bounds: Rect::new(b[0], b[1], b[2], b[3]),
        nx,
        ny,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{DenseNet, OutputActivation};

    fn zero_measure() -> DistanceMeasure {
        DistanceMeasure::from_net(
            DistanceKind::PPhi,
            DenseNet::zeros(&[4, 3, 1], OutputActivation::Logistic),
            vec![1.0; 2],
            1e-3,
            5,
        )
        .unwrap()
    }

    #[test]
    fn walls_are_absent_and_dimensions_match() {
        let grid = export_heatmap(&zero_measure(), EnvKind::FourRoom, [-0.6, -0.6], 48, 40).unwrap();
        assert_eq!((grid.nx, grid.ny, grid.values.len()), (48, 40, 48 * 40));
        let geometry = EnvSpec::new(EnvKind::FourRoom).geometry();
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let free = geometry.is_free(grid.cell_center(i, j));
                assert_eq!(grid.get(i, j).is_some(), free);
                if free {
                    assert_eq!(grid.get(i, j), Some(0.5));
                }
            }
        }
        assert!(grid.values.iter().any(|v| v.is_none()));
    }

    #[test]
    fn reference_inside_wall_fails() {
        let e = export_heatmap(&zero_measure(), EnvKind::FourRoom, [0.0, -0.2], 8, 8).unwrap_err();
        assert!(matches!(e, Error::PoseInsideGeometry { .. }));
        let e = export_heatmap(&zero_measure(), EnvKind::PointMassObstacle, [0.1, 0.1], 8, 8).unwrap_err();
        assert!(matches!(e, Error::PoseInsideGeometry { .. }));
    }

    #[test]
    fn file_round_trip() {
        let grid = export_heatmap(&zero_measure(), EnvKind::PointMassObstacle, [0.7, -0.7], 12, 9).unwrap();
        let text = write_heatmap(&grid);
        assert!(text.starts_with("kind=p_phi\nenv=point_mass_obstacle\nreference=0.7,-0.7\n"));
        assert_eq!(parse_heatmap(&text).unwrap(), grid);
        assert!(parse_heatmap(&text.replace("resolution=12,9", "resolution=12,10")).is_err());
        assert!(parse_heatmap(&text.replacen("0.5", "1.5", 1)).is_err());
        assert!(parse_heatmap("kind=p_phi\n").is_err());
    }

    #[test]
    fn cell_lookup() {
        let grid = export_heatmap(&zero_measure(), EnvKind::PointMass, [0.0, 0.0], 4, 4).unwrap();
        assert_eq!(grid.cell_of([-1.0, -1.0]), Some((0, 0)));
        assert_eq!(grid.cell_of([1.0, 1.0]), Some((3, 3)));
        assert_eq!(grid.cell_of([0.1, -0.1]), Some((2, 1)));
        assert_eq!(grid.cell_of([2.0, 0.0]), None);
    }
}
