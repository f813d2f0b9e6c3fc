use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::env::{eval_metric, Action, ActionSpace, Env, EnvSpec};
use crate::error::{Error, Result};
use crate::nn::write_snapshot;
use crate::replay::{ReplayBuffer, Trajectory};

use super::config::RunConfig;
use super::learner::{Learner, LossSample};

/// Independent random streams of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Init = 1,
    Noise = 2,
    Resets = 3,
    Sampler = 4,
    Behaviour = 5,
    EvalResets = 6,
    EvalNoise = 7,
}

/// Generator for one named stream of `seed`.
pub fn stream(seed: u64, which: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which as u64);
    rng
}

/// One evaluation point.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub seed: u64,
    pub trajectories: usize,
    /// Mean final distance per metric component over the evaluation episodes.
    pub components: Vec<f64>,
    pub l_plus: Option<f64>,
    pub l_o: Option<f64>,
    pub l_o_fraction: Option<f64>,
}

/// Share of the weighted loss that comes from the original goals.
pub fn l_o_fraction(l_plus: f64, l_o: f64, beta_positive: f64, beta_original: f64) -> Option<f64> {
    let p = beta_positive * l_plus;
    let o = beta_original * l_o;
    if p + o > 0.0 {
        Some(o / (p + o))
    } else {
        None
    }
}

fn uniform_action<R: Rng + ?Sized>(space: ActionSpace, rng: &mut R) -> Action {
    match space {
        ActionSpace::Discrete(n) => Action::Discrete(rng.random_range(0..n)),
        ActionSpace::Continuous(n) => Action::Continuous((0..n).map(|_| rng.random::<f64>()).collect()),
    }
}

/// Runs one episode from `reset_seed`, choosing actions with
/// `choose(observation, goal)`; returns the trajectory and the final metric
/// components. The action chosen at `s_T` is recorded but not executed.
pub fn rollout<F>(env: &mut Env, reset_seed: u64, mut choose: F) -> Result<(Trajectory, Vec<f64>)>
where
    F: FnMut(&[f64], &[f64]) -> Result<Action>,
{
    let spec = *env.spec();
    let reset = env.reset(reset_seed);
    let mut observations = Vec::with_capacity(spec.horizon + 1);
    let mut actions = Vec::with_capacity(spec.horizon);
    observations.push(reset.observation);
    for _ in 0..spec.horizon {
        let a = choose(observations.last().expect("nonempty"), &reset.goal.values)?;
        observations.push(env.step(&a)?);
        actions.push(a);
    }
    actions.push(choose(observations.last().expect("nonempty"), &reset.goal.values)?);
    let metric = eval_metric(&spec, &env.state(), &reset.goal).components;
    Ok((Trajectory::new(observations, actions, reset.goal.values)?, metric))
}

/// Uniform-random rollout.
pub fn random_rollout<R: Rng + ?Sized>(env: &mut Env, reset_seed: u64, rng: &mut R) -> Result<(Trajectory, Vec<f64>)> {
    let space = env.spec().action_space();
    rollout(env, reset_seed, |_, _| Ok(uniform_action(space, rng)))
}

/// Mean final metric of `episodes` greedy rollouts. Reset seeds are fixed per
/// run so every evaluation point sees the same start/goal pairs; nothing is
/// stored and no parameter changes.
pub fn evaluate(learner: &Learner, spec: EnvSpec, seed: u64, point: usize, episodes: usize) -> Result<Vec<f64>> {
    let mut resets = stream(seed, Stream::EvalResets);
    let mut noise = stream(seed, Stream::EvalNoise);
    noise.set_word_pos(point as u128 * 64);
    let mut env = Env::new(spec, noise.random());
    let mut sum = vec![0.0; spec.metric_names().len()];
    for _ in 0..episodes {
        let (_, m) = rollout(&mut env, resets.random(), |s, g| learner.greedy_action(s, g))?;
        for (acc, v) in sum.iter_mut().zip(m) {
            *acc += v;
        }
    }
    Ok(sum.into_iter().map(|v| v / episodes as f64).collect())
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub config: RunConfig,
    pub rows: Vec<MetricRow>,
    pub learner: Learner,
    pub buffer: ReplayBuffer,
}

impl RunOutput {
    pub fn metrics_csv(&self) -> String {
        write_metrics(self.config.spec().metric_names(), &self.rows)
    }

    pub fn final_components(&self) -> &[f64] {
        &self.rows.last().expect("at least one evaluation").components
    }
}

/// Collect/update loop of one seeded run, kept in memory.
pub fn run(cfg: &RunConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let spec = cfg.spec();
    let mut init = stream(cfg.seed, Stream::Init);
    let mut resets = stream(cfg.seed, Stream::Resets);
    let mut sampler = stream(cfg.seed, Stream::Sampler);
    let mut behaviour = stream(cfg.seed, Stream::Behaviour);
    let mut learner = Learner::new(cfg, &mut init, &mut resets)?;
    let mut env = Env::new(spec, stream(cfg.seed, Stream::Noise).random());
    let mut buffer = ReplayBuffer::new(cfg.capacity);
    let warmup = cfg.warmup();
    let mut rows = Vec::new();
    let mut window = (LossSample::default(), 0usize);
    for k in 1..=cfg.trajectories {
        let reset_seed = resets.random();
        let (traj, _) = if k <= warmup {
            random_rollout(&mut env, reset_seed, &mut behaviour)?
        } else {
            rollout(&mut env, reset_seed, |s, g| learner.behaviour_action(s, g, &mut behaviour))?
        };
        buffer.append(traj)?;
        if let Some(l) = learner.train(&buffer, cfg, &mut sampler)? {
            window.0.l_plus += l.l_plus;
            window.0.l_o += l.l_o;
            window.1 += 1;
        }
        if k % cfg.eval_every == 0 || k == cfg.trajectories {
            let components = evaluate(&learner, spec, cfg.seed, k, cfg.eval_episodes)?;
            let (l_plus, l_o, l_o_fraction) = if window.1 > 0 {
                let lp = window.0.l_plus / window.1 as f64;
                let lo = window.0.l_o / window.1 as f64;
                (Some(lp), Some(lo), l_o_fraction(lp, lo, cfg.beta_positive, cfg.beta_original))
            } else {
                (None, None, None)
            };
            rows.push(MetricRow {
                seed: cfg.seed,
                trajectories: k,
                components,
                l_plus,
                l_o,
                l_o_fraction,
            });
            window = (LossSample::default(), 0);
        }
    }
    Ok(RunOutput {
        config: cfg.clone(),
        rows,
        learner,
        buffer,
    })
}

/// Runs `cfg` and writes `config.txt`, `metrics.csv` and, if enabled, one
/// `<name>.snap` checkpoint per network into `dir`.
pub fn run_experiment(cfg: &RunConfig, dir: &Path) -> Result<RunOutput> {
    cfg.validate()?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let write = |name: &str, bytes: &[u8]| {
        let path = dir.join(name);
        fs::write(&path, bytes).map_err(|e| Error::io(path, e))
    };
    write("config.txt", cfg.to_text().as_bytes())?;
    let out = run(cfg)?;
    write("metrics.csv", out.metrics_csv().as_bytes())?;
    if cfg.checkpoint {
        for (name, net) in out.learner.networks() {
            write(&format!("{name}.snap"), &write_snapshot(net))?;
        }
    }
    Ok(out)
}

const NA: &str = "NA";

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| NA.to_string(), |x| x.to_string())
}

/// `seed,trajectories,<components>,l_plus,l_o,l_o_fraction`; missing loss
/// values are written as `NA`.
pub fn write_metrics(names: &[&str], rows: &[MetricRow]) -> String {
    let mut out = format!("seed,trajectories,{},l_plus,l_o,l_o_fraction\n", names.join(","));
    for r in rows {
        let comps: Vec<String> = r.components.iter().map(|v| v.to_string()).collect();
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.seed,
            r.trajectories,
            comps.join(","),
            opt(r.l_plus),
            opt(r.l_o),
            opt(r.l_o_fraction)
        ));
    }
    out
}

fn parse_opt(line: usize, s: &str) -> Result<Option<f64>> {
    if s == NA {
        return Ok(None);
    }
    let v: f64 = s.parse().map_err(|_| Error::parse(line, format!("bad number `{s}`")))?;
    if v.is_nan() {
        return Err(Error::parse(line, "NaN value"));
    }
    Ok(Some(v))
}

/// Inverse of [`write_metrics`]; returns the component names and the rows.
pub fn parse_metrics(text: &str) -> Result<(Vec<String>, Vec<MetricRow>)> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| Error::parse(1, "missing header"))?;
    let cols: Vec<&str> = header.split(',').collect();
    let n = cols.len();
    if n < 6 || cols[..2] != ["seed", "trajectories"] || cols[n - 3..] != ["l_plus", "l_o", "l_o_fraction"] {
        return Err(Error::parse(1, "unexpected header"));
    }
    let names: Vec<String> = cols[2..n - 3].iter().map(|s| s.to_string()).collect();
    if names.iter().any(|c| c.is_empty()) {
        return Err(Error::parse(1, "empty column name"));
    }
    let mut rows = Vec::new();
    for (k, line) in lines {
        let ln = k + 1;
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != n {
            return Err(Error::parse(ln, format!("expected {n} fields, got {}", f.len())));
        }
        let seed = f[0].parse().map_err(|_| Error::parse(ln, "bad seed"))?;
        let trajectories = f[1].parse().map_err(|_| Error::parse(ln, "bad trajectory count"))?;
        let components = f[2..n - 3]
            .iter()
            .map(|s| match parse_opt(ln, s)? {
                Some(v) if v >= 0.0 => Ok(v),
                _ => Err(Error::parse(ln, "distances must be nonnegative numbers")),
            })
            .collect::<Result<Vec<f64>>>()?;
        let l_o_fraction = parse_opt(ln, f[n - 1])?;
        if l_o_fraction.is_some_and(|v| !(0.0..=1.0).contains(&v)) {
            return Err(Error::parse(ln, "fraction outside [0, 1]"));
        }
        rows.push(MetricRow {
            seed,
            trajectories,
            components,
            l_plus: parse_opt(ln, f[n - 3])?,
            l_o: parse_opt(ln, f[n - 2])?,
            l_o_fraction,
        });
    }
    Ok((names, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::EnvKind;
    use crate::harness::config::Algorithm;

    fn tiny(alg: Algorithm, env: EnvKind) -> RunConfig {
        let mut c = RunConfig::new(env, alg);
        c.trajectories = 6;
        c.eval_every = 3;
        c.eval_episodes = 2;
        c.hidden = vec![8];
        c.batch = 8;
        c.updates = 2;
        c.distance_pairs = 4;
        c.warmup = Some(2);
        c
    }

    #[test]
    fn fraction_definition() {
        assert_eq!(l_o_fraction(1.0, 0.0, 1.0, 1.0), Some(0.0));
        assert_eq!(l_o_fraction(1.0, 3.0, 1.0, 1.0), Some(0.75));
        assert_eq!(l_o_fraction(2.0, 5.0, 1.0, 0.0), Some(0.0));
        assert_eq!(l_o_fraction(2.0, 5.0, 0.0, 1.0), Some(1.0));
        assert_eq!(l_o_fraction(0.0, 0.0, 1.0, 1.0), None);
    }

    #[test]
    fn every_algorithm_runs_on_its_envs() {
        for env in [EnvKind::PointMass, EnvKind::CarPoint] {
            for alg in Algorithm::for_env(env) {
                let out = run(&tiny(alg, env)).unwrap();
                assert_eq!(out.rows.len(), 2, "{alg} on {env}");
                assert_eq!(out.rows[1].trajectories, 6);
                assert_eq!(out.rows[0].l_plus.is_some(), alg == Algorithm::GcslNf, "{alg}");
                assert!(out.final_components().iter().all(|v| v.is_finite() && *v >= 0.0));
            }
        }
    }

    #[test]
    fn one_row_per_evaluation_point() {
        let mut c = tiny(Algorithm::GcslNf, EnvKind::PointMass);
        c.trajectories = 7;
        let out = run(&c).unwrap();
        let points: Vec<usize> = out.rows.iter().map(|r| r.trajectories).collect();
        assert_eq!(points, vec![3, 6, 7]);
    }

    #[test]
    fn metrics_round_trip() {
        let rows = vec![
            MetricRow { seed: 3, trajectories: 50, components: vec![0.25, 0.1], l_plus: Some(1.5), l_o: Some(0.5), l_o_fraction: Some(0.25) },
            MetricRow { seed: 3, trajectories: 100, components: vec![0.125, 0.0], l_plus: None, l_o: None, l_o_fraction: None },
        ];
        let text = write_metrics(&["position", "velocity"], &rows);
        assert!(text.starts_with("seed,trajectories,position,velocity,l_plus,l_o,l_o_fraction\n"));
        let (names, back) = parse_metrics(&text).unwrap();
        assert_eq!(names, vec!["position", "velocity"]);
        assert_eq!(back, rows);
        assert!(parse_metrics("seed,trajectories,l_plus,l_o,l_o_fraction\n").is_err());
        assert!(parse_metrics("seed,trajectories,position,l_plus,l_o,l_o_fraction\n1,2,-0.5,NA,NA,NA\n").is_err());
        assert!(parse_metrics("seed,trajectories,position,l_plus,l_o,l_o_fraction\n1,2,0.5,NA,NA,1.5\n").is_err());
    }

    #[test]
    fn evaluation_leaves_learner_untouched() {
        let c = tiny(Algorithm::GcslNf, EnvKind::PointMass);
        let out = run(&c).unwrap();
        let before: Vec<Vec<f64>> = out.learner.networks().iter().map(|(_, n)| n.params().to_vec()).collect();
        let a = evaluate(&out.learner, c.spec(), c.seed, 99, 3).unwrap();
        let b = evaluate(&out.learner, c.spec(), c.seed, 99, 3).unwrap();
        assert_eq!(a, b);
        let after: Vec<Vec<f64>> = out.learner.networks().iter().map(|(_, n)| n.params().to_vec()).collect();
        assert_eq!(before, after);
    }
}
