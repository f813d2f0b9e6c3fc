//! Flat `key = value` run configuration.
//!
//! | key              | meaning                                             | default       |
//! |------------------|-----------------------------------------------------|---------------|
//! | `env`            | environment kind                                    | required      |
//! | `algorithm`      | learner id, see [`Algorithm`]                       | required      |
//! | `seed`           | run seed; every random stream derives from it       | `0`           |
//! | `trajectories`   | training trajectories to collect                    | `2000`        |
//! | `eval_every`     | trajectories between evaluations                    | `50`          |
//! | `eval_episodes`  | greedy episodes per evaluation                      | `20`          |
//! | `hidden`         | comma-separated hidden widths                       | `400,300`     |
//! | `lr`             | Adam learning rate                                  | `0.001`       |
//! | `alpha`          | all-action regulariser weight                       | `0.2`         |
//! | `gamma`          | discount                                            | `0.99`        |
//! | `threshold`      | step threshold `n` of the learned distance          | `5`           |
//! | `batch`          | batch size of every learner update                  | `256`         |
//! | `updates`        | gradient steps per collected trajectory             | `16`          |
//! | `distance_pairs` | pairs per set in one distance step                  | `256`         |
//! | `warmup`         | leading uniform-random trajectories                 | per algorithm |
//! | `beta_positive`  | weight of the relabelled-goal loss                  | `1`           |
//! | `beta_original`  | weight of the original-goal loss                    | `1`           |
//! | `capacity`       | replay capacity in trajectories                     | `2000`        |
//! | `checkpoint`     | write final network snapshots (`true`/`false`)      | `true`        |
//!
//! Blank lines and lines starting with `#` are ignored; unknown or repeated
//! keys are errors.

use std::fmt;
use std::str::FromStr;

use crate::env::{EnvKind, EnvSpec};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    GcslNf,
    Gcsl,
    Wgcsl,
    HerDqn,
    HerA2c,
    Cgcrl,
    HerDdpg,
}

impl Algorithm {
    pub const ALL: [Algorithm; 7] = [
        Algorithm::GcslNf,
        Algorithm::Gcsl,
        Algorithm::Wgcsl,
        Algorithm::HerDqn,
        Algorithm::HerA2c,
        Algorithm::Cgcrl,
        Algorithm::HerDdpg,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::GcslNf => "gcsl_nf",
            Algorithm::Gcsl => "gcsl",
            Algorithm::Wgcsl => "wgcsl",
            Algorithm::HerDqn => "her_dqn",
            Algorithm::HerA2c => "her_a2c",
            Algorithm::Cgcrl => "cgcrl",
            Algorithm::HerDdpg => "her_ddpg",
        }
    }

    pub fn supports(self, kind: EnvKind) -> bool {
        match self {
            Algorithm::GcslNf | Algorithm::Gcsl | Algorithm::Cgcrl => true,
            Algorithm::Wgcsl | Algorithm::HerDqn | Algorithm::HerA2c => !kind.is_continuous(),
            Algorithm::HerDdpg => kind.is_continuous(),
        }
    }

    /// Learners compared on an environment kind, main method first.
    pub fn for_env(kind: EnvKind) -> Vec<Algorithm> {
        Algorithm::ALL.into_iter().filter(|a| a.supports(kind)).collect()
    }

    /// Uniform-random trajectories collected before the learner acts.
    pub fn default_warmup(self, kind: EnvKind) -> usize {
        match self {
            Algorithm::Gcsl | Algorithm::Wgcsl | Algorithm::Cgcrl if kind != EnvKind::PointMassBias => {
                crate::baselines::RANDOM_WARMUP
            }
            _ => 0,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown algorithm `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub env: EnvKind,
    pub algorithm: Algorithm,
    pub seed: u64,
    pub trajectories: usize,
    pub eval_every: usize,
    pub eval_episodes: usize,
    pub hidden: Vec<usize>,
    pub lr: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub threshold: usize,
    pub batch: usize,
    pub updates: usize,
    pub distance_pairs: usize,
    pub warmup: Option<usize>,
    pub beta_positive: f64,
    pub beta_original: f64,
    pub capacity: usize,
    pub checkpoint: bool,
}

impl RunConfig {
    pub fn new(env: EnvKind, algorithm: Algorithm) -> Self {
        RunConfig {
            env,
            algorithm,
            seed: 0,
            trajectories: 2000,
            eval_every: 50,
            eval_episodes: 20,
            hidden: crate::nn::DEFAULT_HIDDEN.to_vec(),
            lr: 1e-3,
            alpha: crate::agent::ALPHA,
            gamma: crate::agent::GAMMA,
            threshold: crate::distance::DEFAULT_THRESHOLD,
            batch: crate::agent::BATCH_SIZE,
            updates: crate::agent::UPDATES_PER_TRAJECTORY,
            distance_pairs: crate::agent::BATCH_SIZE,
            warmup: None,
            beta_positive: crate::agent::BETA,
            beta_original: crate::agent::BETA,
            capacity: 2000,
            checkpoint: true,
        }
    }

    pub fn spec(&self) -> EnvSpec {
        EnvSpec::new(self.env)
    }

    pub fn warmup(&self) -> usize {
        self.warmup.unwrap_or_else(|| self.algorithm.default_warmup(self.env))
    }

    pub fn validate(&self) -> Result<()> {
        if !self.algorithm.supports(self.env) {
            return Err(Error::Config(format!("{} does not run on {}", self.algorithm, self.env)));
        }
        let counts = [
            ("trajectories", self.trajectories),
            ("eval_every", self.eval_every),
            ("eval_episodes", self.eval_episodes),
            ("threshold", self.threshold),
            ("batch", self.batch),
            ("updates", self.updates),
            ("distance_pairs", self.distance_pairs),
            ("capacity", self.capacity),
        ];
        if let Some((k, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("`{k}` must be positive")));
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err(Error::Config("`hidden` needs at least one positive width".into()));
        }
        let reals = [
            ("lr", self.lr),
            ("alpha", self.alpha),
            ("gamma", self.gamma),
            ("beta_positive", self.beta_positive),
            ("beta_original", self.beta_original),
        ];
        if let Some((k, _)) = reals.iter().find(|(_, v)| !v.is_finite() || *v < 0.0) {
            return Err(Error::Config(format!("`{k}` must be finite and nonnegative")));
        }
        if self.lr == 0.0 || self.gamma > 1.0 {
            return Err(Error::Config("need lr > 0 and gamma <= 1".into()));
        }
        Ok(())
    }

    /// Parses and validates a config file.
    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs: Vec<(usize, &str, &str)> = Vec::new();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(k + 1, "expected `key = value`"))?;
            let key = key.trim();
            if pairs.iter().any(|(_, seen, _)| *seen == key) {
                return Err(Error::parse(k + 1, format!("duplicate key `{key}`")));
            }
            pairs.push((k + 1, key, value.trim()));
        }
        let lookup = |name: &str| pairs.iter().find(|(_, key, _)| *key == name);
        let (line, _, env) = lookup("env").ok_or_else(|| Error::Config("missing `env`".into()))?;
        let env: EnvKind = env.parse().map_err(|e: Error| Error::parse(*line, e.to_string()))?;
        let (line, _, algorithm) = lookup("algorithm").ok_or_else(|| Error::Config("missing `algorithm`".into()))?;
        let algorithm: Algorithm = algorithm.parse().map_err(|e: Error| Error::parse(*line, e.to_string()))?;
        let mut cfg = RunConfig::new(env, algorithm);
        for &(line, key, value) in &pairs {
            cfg.set(key, value).map_err(|msg| Error::parse(line, msg))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies one `key = value` override.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        fn num<T: FromStr>(key: &str, v: &str) -> std::result::Result<T, String> {
            v.parse().map_err(|_| format!("bad value `{v}` for `{key}`"))
        }
        match key {
            "env" => self.env = value.parse().map_err(|e: Error| e.to_string())?,
            "algorithm" => self.algorithm = value.parse().map_err(|e: Error| e.to_string())?,
            "seed" => self.seed = num(key, value)?,
            "trajectories" => self.trajectories = num(key, value)?,
            "eval_every" => self.eval_every = num(key, value)?,
            "eval_episodes" => self.eval_episodes = num(key, value)?,
            "hidden" => {
                self.hidden = value
                    .split(',')
                    .map(|w| num(key, w.trim()))
                    .collect::<std::result::Result<_, _>>()?
            }
            "lr" => self.lr = num(key, value)?,
            "alpha" => self.alpha = num(key, value)?,
            "gamma" => self.gamma = num(key, value)?,
            "threshold" => self.threshold = num(key, value)?,
            "batch" => self.batch = num(key, value)?,
            "updates" => self.updates = num(key, value)?,
            "distance_pairs" => self.distance_pairs = num(key, value)?,
            "warmup" => self.warmup = Some(num(key, value)?),
            "beta_positive" => self.beta_positive = num(key, value)?,
            "beta_original" => self.beta_original = num(key, value)?,
            "capacity" => self.capacity = num(key, value)?,
            "checkpoint" => self.checkpoint = num(key, value)?,
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    /// Canonical text form; `parse(to_text())` round-trips.
    pub fn to_text(&self) -> String {
        let hidden: Vec<String> = self.hidden.iter().map(|w| w.to_string()).collect();
        let mut out = format!(
            "env = {}\nalgorithm = {}\nseed = {}\ntrajectories = {}\neval_every = {}\neval_episodes = {}\n\
             hidden = {}\nlr = {:?}\nalpha = {:?}\ngamma = {:?}\nthreshold = {}\nbatch = {}\nupdates = {}\n\
             distance_pairs = {}\n",
            self.env,
            self.algorithm,
            self.seed,
            self.trajectories,
            self.eval_every,
            self.eval_episodes,
            hidden.join(","),
            self.lr,
            self.alpha,
            self.gamma,
            self.threshold,
            self.batch,
            self.updates,
            self.distance_pairs,
        );
        if let Some(w) = self.warmup {
            out.push_str(&format!("warmup = {w}\n"));
        }
        out.push_str(&format!(
            "beta_positive = {:?}\nbeta_original = {:?}\ncapacity = {}\ncheckpoint = {}\n",
            self.beta_positive, self.beta_original, self.capacity, self.checkpoint
        ));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_round_trip() {
        let mut cfg = RunConfig::parse("env = point_mass\nalgorithm = gcsl_nf\n").unwrap();
        assert_eq!(cfg.hidden, vec![400, 300]);
        assert_eq!((cfg.trajectories, cfg.eval_every, cfg.eval_episodes), (2000, 50, 20));
        assert_eq!(cfg.warmup(), 0);
        cfg.seed = 7;
        cfg.warmup = Some(3);
        cfg.lr = 3e-4;
        assert_eq!(RunConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn rejects_unknown_and_repeated_keys() {
        let e = RunConfig::parse("env = point_mass\nalgorithm = gcsl\nlearning_rate = 1\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }), "{e}");
        assert!(RunConfig::parse("env = point_mass\nenv = four_room\nalgorithm = gcsl\n").is_err());
        assert!(RunConfig::parse("env point_mass\n").is_err());
        assert!(RunConfig::parse("algorithm = gcsl\n").is_err());
    }

    #[test]
    fn rejects_incompatible_pairs_and_zero_counts() {
        assert!(RunConfig::parse("env = car_point\nalgorithm = her_dqn\n").is_err());
        assert!(RunConfig::parse("env = point_mass\nalgorithm = her_ddpg\n").is_err());
        assert!(RunConfig::parse("env = point_mass\nalgorithm = gcsl\ntrajectories = 0\n").is_err());
        assert!(RunConfig::parse("env = point_mass\nalgorithm = gcsl\nhidden = 64,0\n").is_err());
        assert!(RunConfig::parse("# comment\n\nenv = car_point\nalgorithm = her_ddpg\n").is_ok());
    }

    #[test]
    fn warmup_follows_algorithm_and_env() {
        assert_eq!(Algorithm::Gcsl.default_warmup(EnvKind::PointMass), 200);
        assert_eq!(Algorithm::Gcsl.default_warmup(EnvKind::PointMassBias), 0);
        assert_eq!(Algorithm::GcslNf.default_warmup(EnvKind::FourRoom), 0);
        assert_eq!(Algorithm::for_env(EnvKind::PointMass).len(), 6);
        assert_eq!(Algorithm::for_env(EnvKind::CarPoint).len(), 4);
    }
}
