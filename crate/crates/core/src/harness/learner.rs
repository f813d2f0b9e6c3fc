//! One interface over every learner the harness can train.

use rand::Rng;

use crate::agent::{ContinuousPolicyPair, DiscretePolicy, BIAS_PRETRAIN_BATCH, BIAS_PRETRAIN_STEPS};
use crate::baselines::{
    gcsl_update, sample_cgcrl_batch, Cgcrl, ContinuousGcsl, HerA2c, HerDdpg, HerDqn, SoftmaxPolicy, Wgcsl,
    cgcrl::FUTURE_P,
};
use crate::distance::DistanceModel;
use crate::env::{Action, ActionSpace, EnvKind, EnvSpec};
use crate::error::Result;
use crate::nn::DenseNet;
use crate::replay::{
    sample_expert_tuples, sample_original_tuples, sample_pair_batch, sample_transitions, ReplayBuffer,
};

use super::config::{Algorithm, RunConfig};

/// Action index the initial-bias task pretrains toward ("right").
pub const BIAS_ACTION: usize = 4;

/// Mean component losses of the main method over one update round.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossSample {
    pub l_plus: f64,
    pub l_o: f64,
}

#[derive(Debug, Clone)]
pub enum Learner {
    GcslNf { policy: DiscretePolicy, distance: DistanceModel },
    GcslNfContinuous { pair: ContinuousPolicyPair, distance: DistanceModel },
    Gcsl(SoftmaxPolicy),
    GcslContinuous(ContinuousGcsl),
    Wgcsl(Wgcsl),
    HerDqn(HerDqn),
    HerA2c(HerA2c),
    Cgcrl(Cgcrl),
    HerDdpg(HerDdpg),
}

impl Learner {
    /// Builds the learner for `cfg`; on the initial-bias task the imitation
    /// learners are first pushed toward [`BIAS_ACTION`] with states and goals
    /// drawn from `reset_rng`.
    pub fn new<R: Rng + ?Sized>(cfg: &RunConfig, init_rng: &mut R, reset_rng: &mut R) -> Result<Self> {
        cfg.validate()?;
        let spec = cfg.spec();
        let scale = spec.obs_scale();
        let h = &cfg.hidden;
        let continuous = spec.kind.is_continuous();
        let n = match spec.action_space() {
            ActionSpace::Discrete(n) | ActionSpace::Continuous(n) => n,
        };
        let mut learner = match (cfg.algorithm, continuous) {
            (Algorithm::GcslNf, false) => {
                let mut policy = DiscretePolicy::new(scale.clone(), n, h, cfg.lr, init_rng);
                policy.alpha = cfg.alpha;
                policy.gamma = cfg.gamma;
                policy.beta_positive = cfg.beta_positive;
                policy.beta_original = cfg.beta_original;
                let distance = DistanceModel::new(scale, h, cfg.lr, cfg.threshold, init_rng);
                Learner::GcslNf { policy, distance }
            }
            (Algorithm::GcslNf, true) => {
                let mut pair = ContinuousPolicyPair::new(scale.clone(), n, h, cfg.lr, init_rng);
                pair.alpha = cfg.alpha;
                pair.gamma = cfg.gamma;
                pair.beta_positive = cfg.beta_positive;
                pair.beta_original = cfg.beta_original;
                let distance = DistanceModel::new(scale, h, cfg.lr, cfg.threshold, init_rng);
                Learner::GcslNfContinuous { pair, distance }
            }
            (Algorithm::Gcsl, false) => Learner::Gcsl(SoftmaxPolicy::new(scale, n, h, cfg.lr, init_rng)),
            (Algorithm::Gcsl, true) => Learner::GcslContinuous(ContinuousGcsl::new(scale, n, h, cfg.lr, init_rng)),
            (Algorithm::Wgcsl, _) => {
                let mut w = Wgcsl::new(scale, n, h, cfg.lr, init_rng);
                w.gamma = cfg.gamma;
                Learner::Wgcsl(w)
            }
            (Algorithm::HerDqn, _) => {
                let mut q = HerDqn::new(scale, n, h, cfg.lr, init_rng);
                q.gamma = cfg.gamma;
                Learner::HerDqn(q)
            }
            (Algorithm::HerA2c, _) => {
                let mut a = HerA2c::new(scale, n, h, cfg.lr, init_rng);
                a.gamma = cfg.gamma;
                Learner::HerA2c(a)
            }
            (Algorithm::Cgcrl, _) => Learner::Cgcrl(Cgcrl::new(scale, spec.action_space(), h, cfg.lr, init_rng)),
            (Algorithm::HerDdpg, _) => {
                let mut d = HerDdpg::new(scale, n, h, cfg.lr, init_rng);
                d.gamma = cfg.gamma;
                Learner::HerDdpg(d)
            }
        };
        if spec.kind == EnvKind::PointMassBias {
            learner.pretrain_bias(&spec, reset_rng)?;
        }
        Ok(learner)
    }

    fn pretrain_bias<R: Rng + ?Sized>(&mut self, spec: &EnvSpec, rng: &mut R) -> Result<()> {
        for _ in 0..BIAS_PRETRAIN_STEPS {
            let rows: Vec<(Vec<f64>, Vec<f64>)> = (0..BIAS_PRETRAIN_BATCH)
                .map(|_| {
                    let r = crate::env::reset(*spec, rng.random());
                    (r.observation, r.goal.values)
                })
                .collect();
            match self {
                Learner::GcslNf { policy, .. } => {
                    policy.pretrain_toward(BIAS_ACTION, &rows)?;
                }
                Learner::Gcsl(policy) => {
                    let weighted: Vec<_> =
                        rows.iter().map(|(s, g)| (s.as_slice(), g.as_slice(), BIAS_ACTION, 1.0)).collect();
                    policy.weighted_nll_step(&weighted)?;
                }
                _ => return Ok(()),
            }
        }
        Ok(())
    }

    /// Action during data collection: greedy for the imitation learners,
    /// epsilon-greedy for DQN, softmax sampling for A2C and Gaussian noise
    /// for DDPG.
    pub fn behaviour_action<R: Rng + ?Sized>(&mut self, s: &[f64], g: &[f64], rng: &mut R) -> Result<Action> {
        match self {
            Learner::HerDqn(q) => Ok(Action::Discrete(q.act_epsilon_greedy(s, g, rng)?)),
            Learner::HerA2c(a) => Ok(Action::Discrete(a.act_behaviour(s, g, rng)?)),
            Learner::HerDdpg(d) => Ok(Action::Continuous(d.act_noisy(s, g, rng)?)),
            _ => self.greedy_action(s, g),
        }
    }

    /// Deterministic action used for evaluation.
    pub fn greedy_action(&self, s: &[f64], g: &[f64]) -> Result<Action> {
        Ok(match self {
            Learner::GcslNf { policy, .. } => Action::Discrete(policy.act_discrete(s, g)?),
            Learner::GcslNfContinuous { pair, .. } => Action::Continuous(pair.act(s, g)?),
            Learner::Gcsl(p) => Action::Discrete(p.act_greedy(s, g)?),
            Learner::GcslContinuous(p) => Action::Continuous(p.act(s, g)?),
            Learner::Wgcsl(w) => Action::Discrete(w.policy.act_greedy(s, g)?),
            Learner::HerDqn(q) => Action::Discrete(q.act_greedy(s, g)?),
            Learner::HerA2c(a) => Action::Discrete(a.policy.act_greedy(s, g)?),
            Learner::Cgcrl(c) => c.cgcrl_act(s, g)?,
            Learner::HerDdpg(d) => Action::Continuous(d.act(s, g)?),
        })
    }

    /// Update round after a trajectory was appended to `buffer`. Returns the
    /// mean `(L+, L_o)` for the main method and `None` otherwise.
    pub fn train<R: Rng + ?Sized>(
        &mut self,
        buffer: &ReplayBuffer,
        cfg: &RunConfig,
        rng: &mut R,
    ) -> Result<Option<LossSample>> {
        let (b, u) = (cfg.batch, cfg.updates);
        match self {
            Learner::GcslNf { policy, distance } => {
                if buffer.len() >= 2 {
                    distance.train_step(&sample_pair_batch(buffer, cfg.threshold, cfg.distance_pairs, rng)?)?;
                }
                let mut acc = LossSample::default();
                for _ in 0..u {
                    let expert = sample_expert_tuples(buffer, b, rng)?;
                    let original = sample_original_tuples(buffer, b, rng)?;
                    let (lp, lo) = policy.update_policy(&expert, &original, distance)?;
                    acc.l_plus += lp / u as f64;
                    acc.l_o += lo / u as f64;
                }
                Ok(Some(acc))
            }
            Learner::GcslNfContinuous { pair, distance } => {
                if buffer.len() >= 2 {
                    distance.train_step(&sample_pair_batch(buffer, cfg.threshold, cfg.distance_pairs, rng)?)?;
                }
                let mut acc = LossSample::default();
                for _ in 0..u {
                    let expert = sample_expert_tuples(buffer, b, rng)?;
                    let original = sample_original_tuples(buffer, b, rng)?;
                    let (lp, lo) = pair.continuous_critic_loss(&expert, &original, distance)?;
                    let rows: Vec<(&[f64], &[f64])> = expert
                        .iter()
                        .map(|e| (e.state.as_slice(), e.goal.as_slice()))
                        .chain(original.iter().map(|o| (o.state.as_slice(), o.goal.as_slice())))
                        .collect();
                    pair.continuous_actor_loss(&rows)?;
                    acc.l_plus += lp / u as f64;
                    acc.l_o += lo / u as f64;
                }
                Ok(Some(acc))
            }
            Learner::Gcsl(p) => {
                for _ in 0..u {
                    gcsl_update(p, &sample_expert_tuples(buffer, b, rng)?)?;
                }
                Ok(None)
            }
            Learner::GcslContinuous(p) => {
                for _ in 0..u {
                    p.gcsl_update(&sample_expert_tuples(buffer, b, rng)?)?;
                }
                Ok(None)
            }
            Learner::Wgcsl(w) => {
                for _ in 0..u {
                    w.wgcsl_update(&sample_expert_tuples(buffer, b, rng)?)?;
                }
                Ok(None)
            }
            Learner::HerDqn(q) => {
                for _ in 0..u {
                    q.her_dqn_update(&sample_transitions(buffer, b, rng)?)?;
                }
                q.sync_target();
                Ok(None)
            }
            Learner::HerA2c(a) => {
                if let (Some(id), Some(oldest)) = (buffer.id(buffer.len().wrapping_sub(1)), buffer.id(0)) {
                    a.commit_trajectory(id, oldest);
                }
                for _ in 0..u {
                    a.her_a2c_update(&sample_transitions(buffer, b, rng)?)?;
                }
                Ok(None)
            }
            Learner::Cgcrl(c) => {
                if buffer.len() < 2 {
                    return Ok(None);
                }
                for _ in 0..u {
                    let batch = sample_cgcrl_batch(buffer, b, FUTURE_P, rng)?;
                    c.cgcrl_update(&batch)?;
                    if c.has_actor() {
                        let rows: Vec<(&[f64], &[f64])> =
                            batch.iter().map(|s| (s.state.as_slice(), s.positive.as_slice())).collect();
                        c.actor_update(&rows)?;
                    }
                }
                Ok(None)
            }
            Learner::HerDdpg(d) => {
                for _ in 0..u {
                    d.her_ddpg_update(&sample_transitions(buffer, b, rng)?)?;
                }
                Ok(None)
            }
        }
    }

    /// The trained `p_phi` of the main method.
    pub fn distance(&self) -> Option<&DistanceModel> {
        match self {
            Learner::GcslNf { distance, .. } | Learner::GcslNfContinuous { distance, .. } => Some(distance),
            _ => None,
        }
    }

    /// Named networks written as checkpoints.
    pub fn networks(&self) -> Vec<(&'static str, &DenseNet)> {
        match self {
            Learner::GcslNf { policy, distance } => vec![("policy", policy.net()), ("distance", distance.net())],
            Learner::GcslNfContinuous { pair, distance } => vec![
                ("critic", pair.critic()),
                ("actor", pair.actor()),
                ("distance", distance.net()),
            ],
            Learner::Gcsl(p) => vec![("policy", p.net())],
            Learner::GcslContinuous(p) => vec![("actor", p.actor())],
            Learner::Wgcsl(w) => vec![("policy", w.policy.net()), ("value", w.value.net())],
            Learner::HerDqn(q) => vec![("q", q.net())],
            Learner::HerA2c(a) => vec![("policy", a.policy.net()), ("value", a.value.net())],
            Learner::Cgcrl(c) => {
                let mut v = vec![("phi", c.phi()), ("psi", c.psi())];
                if let Some(actor) = c.actor() {
                    v.push(("actor", actor));
                }
                v
            }
            Learner::HerDdpg(d) => vec![("actor", d.actor()), ("critic", d.critic())],
        }
    }
}
