use std::fs;
use std::path::Path;

use rand::Rng;

use crate::distance::{DistanceMeasure, DistanceModel};
use crate::env::geometry::Point;
use crate::env::{four_room_geometry, Action, Env, EnvKind, EnvSpec};
use crate::error::{Error, Result};
use crate::replay::{sample_pair_batch, ReplayBuffer};

use super::aggregate::{aggregate, write_aggregate, Aggregate};
use super::config::{Algorithm, RunConfig};
use super::heatmap::{export_heatmap, write_heatmap, HeatmapGrid};
use super::planner::{GridPlanner, PLANNER_CELLS};
use super::run::{random_rollout, rollout, run, run_experiment, stream, RunOutput, Stream};

/// Runs `cfg` once per seed and aggregates. With `dir`, each run goes to
/// `dir/seed_<s>` and the aggregate to `dir/aggregate.csv`.
pub fn run_seeds(cfg: &RunConfig, seeds: &[u64], dir: Option<&Path>) -> Result<(Aggregate, Vec<RunOutput>)> {
    let outputs = seeds
        .iter()
        .map(|&seed| {
            let mut c = cfg.clone();
            c.seed = seed;
            match dir {
                Some(d) => run_experiment(&c, &d.join(format!("seed_{seed}"))),
                None => run(&c),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let names: Vec<String> = cfg.spec().metric_names().iter().map(|s| s.to_string()).collect();
    let parsed: Vec<_> = outputs.iter().map(|o| (names.clone(), o.rows.clone())).collect();
    let agg = aggregate(&parsed)?;
    if let Some(d) = dir {
        fs::create_dir_all(d).map_err(|e| Error::io(d, e))?;
        let path = d.join("aggregate.csv");
        fs::write(&path, write_aggregate(&agg)).map_err(|e| Error::io(path, e))?;
    }
    Ok((agg, outputs))
}

/// Which loss terms a feedback-ablation variant trains on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Feedback {
    Both,
    PositiveOnly,
    OriginalOnly,
}

impl Feedback {
    pub const ALL: [Feedback; 3] = [Feedback::Both, Feedback::PositiveOnly, Feedback::OriginalOnly];

    pub fn name(self) -> &'static str {
        match self {
            Feedback::Both => "both",
            Feedback::PositiveOnly => "positive_only",
            Feedback::OriginalOnly => "original_only",
        }
    }

    /// `(beta_positive, beta_original)`.
    pub fn betas(self) -> (f64, f64) {
        match self {
            Feedback::Both => (1.0, 1.0),
            Feedback::PositiveOnly => (1.0, 0.0),
            Feedback::OriginalOnly => (0.0, 1.0),
        }
    }
}

/// GCSL-NF on the obstacle map with both losses, `L+` only and `L_o` only,
/// all without random warm-up. Results go to `dir/<variant>/` if given.
pub fn ablate_feedback(base: &RunConfig, seeds: &[u64], dir: Option<&Path>) -> Result<Vec<(Feedback, Aggregate)>> {
    if base.env != EnvKind::PointMassObstacle || base.algorithm != Algorithm::GcslNf {
        return Err(Error::Config("the feedback ablation runs gcsl_nf on point_mass_obstacle".into()));
    }
    Feedback::ALL
        .into_iter()
        .map(|f| {
            let mut cfg = base.clone();
            (cfg.beta_positive, cfg.beta_original) = f.betas();
            cfg.warmup = Some(0);
            let sub = dir.map(|d| d.join(f.name()));
            let (agg, _) = run_seeds(&cfg, seeds, sub.as_deref())?;
            Ok((f, agg))
        })
        .collect()
}

/// Least-squares slope of `values` against their index.
pub fn trend_slope(values: &[f64]) -> Option<f64> {
    if values.len() < 2 {
        return None;
    }
    let n = values.len() as f64;
    let mx = (n - 1.0) / 2.0;
    let my = values.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (k, v) in values.iter().enumerate() {
        let dx = k as f64 - mx;
        sxy += dx * (v - my);
        sxx += dx * dx;
    }
    Some(sxy / sxx)
}

/// Data source for training a distance function in isolation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataPolicy {
    /// Learned together with the GCSL-NF policy.
    Joint,
    Random,
    Planner,
}

impl DataPolicy {
    pub const ALL: [DataPolicy; 3] = [DataPolicy::Joint, DataPolicy::Random, DataPolicy::Planner];

    pub fn name(self) -> &'static str {
        match self {
            DataPolicy::Joint => "joint",
            DataPolicy::Random => "random",
            DataPolicy::Planner => "planner",
        }
    }
}

/// Thresholds compared by the policy-dependence ablation.
pub const ABLATION_THRESHOLDS: [usize; 2] = [5, 25];
/// Reference state of the four-room heatmaps, just below the horizontal wall.
pub const DEFAULT_REFERENCE: Point = [-0.6, -0.1];

/// Collects `cfg.trajectories` episodes with a fixed policy and trains a
/// fresh `p_phi` with one step after each, as in joint training.
pub fn train_distance_offline(cfg: &RunConfig, policy: DataPolicy) -> Result<DistanceModel> {
    let spec = cfg.spec();
    let mut init = stream(cfg.seed, Stream::Init);
    let mut resets = stream(cfg.seed, Stream::Resets);
    let mut sampler = stream(cfg.seed, Stream::Sampler);
    let mut behaviour = stream(cfg.seed, Stream::Behaviour);
    let mut env = Env::new(spec, stream(cfg.seed, Stream::Noise).random());
    let mut model = DistanceModel::new(spec.obs_scale(), &cfg.hidden, cfg.lr, cfg.threshold, &mut init);
    let planner = GridPlanner::new(spec.geometry(), PLANNER_CELLS);
    let mut buffer = ReplayBuffer::new(cfg.capacity);
    for _ in 0..cfg.trajectories {
        let seed = resets.random();
        let (traj, _) = match policy {
            DataPolicy::Random => random_rollout(&mut env, seed, &mut behaviour)?,
            DataPolicy::Planner => planner_rollout(&mut env, seed, &planner)?,
            DataPolicy::Joint => return Err(Error::Config("joint distances come from a GCSL-NF run".into())),
        };
        buffer.append(traj)?;
        if buffer.len() >= 2 {
            model.train_step(&sample_pair_batch(&buffer, cfg.threshold, cfg.distance_pairs, &mut sampler)?)?;
        }
    }
    Ok(model)
}

/// Closed-loop shortest-path rollout on a planar discrete map.
pub fn planner_rollout(env: &mut Env, reset_seed: u64, planner: &GridPlanner) -> Result<(crate::replay::Trajectory, Vec<f64>)> {
    let mut field: Option<(Point, Vec<Option<u32>>)> = None;
    rollout(env, reset_seed, |s, g| {
        let goal = [g[0], g[1]];
        if field.as_ref().is_none_or(|(cached, _)| *cached != goal) {
            field = Some((goal, planner.distance_field(goal)));
        }
        let f = &field.as_ref().expect("just set").1;
        Ok(Action::Discrete(planner.action(f, [s[0], s[1]], goal)))
    })
}

/// Six four-room heatmaps: `{joint, random, planner} x {5, 25}`, written to
/// `dir/<policy>_n<n>.grid` when `dir` is given.
pub fn ablate_distance_policy_dependence(
    base: &RunConfig,
    reference: Point,
    resolution: usize,
    dir: Option<&Path>,
) -> Result<Vec<(DataPolicy, usize, HeatmapGrid)>> {
    if base.env != EnvKind::FourRoom {
        return Err(Error::Config("the distance ablation runs on four_room".into()));
    }
    let mut out = Vec::new();
    for n in ABLATION_THRESHOLDS {
        let mut cfg = base.clone();
        cfg.threshold = n;
        cfg.algorithm = Algorithm::GcslNf;
        for policy in DataPolicy::ALL {
            let model = match policy {
                DataPolicy::Joint => run(&cfg)?
                    .learner
                    .distance()
                    .cloned()
                    .expect("gcsl_nf owns a distance model"),
                p => train_distance_offline(&cfg, p)?,
            };
            let grid = export_heatmap(&DistanceMeasure::PPhi(model), cfg.env, reference, resolution, resolution)?;
            if let Some(d) = dir {
                fs::create_dir_all(d).map_err(|e| Error::io(d, e))?;
                let path = d.join(format!("{}_n{n}.grid", policy.name()));
                fs::write(&path, write_heatmap(&grid)).map_err(|e| Error::io(path, e))?;
            }
            out.push((policy, n, grid));
        }
    }
    Ok(out)
}

/// Outcome of the four-room wall-awareness probe.
#[derive(Debug, Clone, PartialEq)]
pub struct WallAwareness {
    pub references: usize,
    pub passed: usize,
}

impl WallAwareness {
    pub fn fraction(&self) -> f64 {
        self.passed as f64 / self.references as f64
    }
}

/// Radius of the probe circle around each reference state.
pub const PROBE_RADIUS: f64 = 0.3;
const PROBE_ANGLES: usize = 72;
/// Reference states lie at most this far from a wall centre line.
const NEAR_WALL: f64 = 0.1;

fn quadrant(p: Point) -> (bool, bool) {
    (p[0] > 0.0, p[1] > 0.0)
}

/// Same-room and across-wall probes at [`PROBE_RADIUS`] around `reference`;
/// probes reached through a doorway in a straight line are left out.
pub fn wall_probes(reference: Point) -> (Vec<Point>, Vec<Point>) {
    let g = four_room_geometry();
    let (mut same, mut across) = (Vec::new(), Vec::new());
    for k in 0..PROBE_ANGLES {
        let a = 2.0 * std::f64::consts::PI * k as f64 / PROBE_ANGLES as f64;
        let p = [reference[0] + PROBE_RADIUS * a.cos(), reference[1] + PROBE_RADIUS * a.sin()];
        if !g.is_free(p) {
            continue;
        }
        if quadrant(p) == quadrant(reference) {
            same.push(p);
        } else if g.segment_blocked(reference, p) {
            across.push(p);
        }
    }
    (same, across)
}

/// Draws a free state within `NEAR_WALL` of a wall that has probes on both
/// sides of it.
pub fn sample_wall_reference<R: Rng + ?Sized>(rng: &mut R) -> Point {
    let g = four_room_geometry();
    loop {
        let along = rng.random_range(-1.1..1.1);
        let off = rng.random_range(-NEAR_WALL..NEAR_WALL);
        let p = if rng.random::<bool>() { [off, along] } else { [along, off] };
        if !g.is_free(p) {
            continue;
        }
        let (same, across) = wall_probes(p);
        if !same.is_empty() && !across.is_empty() {
            return p;
        }
    }
}

/// Counts reference states whose mean similarity to across-wall probes is
/// below the mean similarity to same-room probes.
pub fn wall_awareness<R: Rng + ?Sized>(model: &DistanceModel, references: usize, rng: &mut R) -> Result<WallAwareness> {
    let spec = EnvSpec::new(EnvKind::FourRoom);
    let mut passed = 0;
    for _ in 0..references {
        let r = sample_wall_reference(rng);
        debug_assert!(spec.geometry().is_free(r));
        let (same, across) = wall_probes(r);
        let mean = |ps: &[Point]| -> Result<f64> {
            let pairs: Vec<(&[f64], &[f64])> = ps.iter().map(|p| (&r[..], &p[..])).collect();
            Ok(model.eval_batch(&pairs)?.iter().sum::<f64>() / ps.len() as f64)
        };
        if mean(&across)? < mean(&same)? {
            passed += 1;
        }
    }
    Ok(WallAwareness { references, passed })
}

/// Fraction of planner rollouts that end within `tolerance` of the goal.
pub fn planner_success(episodes: usize, tolerance: f64, seed: u64) -> Result<f64> {
    let spec = EnvSpec::new(EnvKind::FourRoom);
    let planner = GridPlanner::new(spec.geometry(), PLANNER_CELLS);
    let mut env = Env::new(spec, seed);
    let mut resets = stream(seed, Stream::Resets);
    let mut ok = 0;
    for _ in 0..episodes {
        let (_, m) = planner_rollout(&mut env, resets.random(), &planner)?;
        if m[0] <= tolerance {
            ok += 1;
        }
    }
    Ok(ok as f64 / episodes as f64)
}
