use std::collections::BTreeMap;

use rand::Rng;

use crate::error::Result;
use crate::replay::Transition;

use super::common::{scaled_distance, SoftmaxPolicy, TdRow, ValueNet, WeightedRow};
use super::gcsl::discrete_action;

pub const GAMMA: f64 = 0.99;
/// Weight of the policy entropy bonus in the actor loss.
pub const ENTROPY_COEF: f64 = 0.01;

/// `r_t = 1 / (1 + ||s_t - g||)` in scaled observation units.
pub fn a2c_reward(scale: &[f64], s: &[f64], g: &[f64]) -> f64 {
    1.0 / (1.0 + scaled_distance(scale, s, g))
}

/// One-step advantage actor-critic over relabelled and original goals.
///
/// Replayed actions come from older policies, so each actor row is scaled
/// by the truncated ratio between the current and the recorded behaviour
/// probability of its action. Without it the unbounded `-A log pi` term on
/// negative-advantage actions drives the softmax to saturation.
#[derive(Debug, Clone)]
pub struct HerA2c {
    pub policy: SoftmaxPolicy,
    pub value: ValueNet,
    pub gamma: f64,
    pub entropy_coef: f64,
    scale: Vec<f64>,
    // behaviour probability of a_t, keyed by trajectory id
    behaviour: BTreeMap<u64, Vec<f64>>,
    pending: Vec<f64>,
}

impl HerA2c {
    pub fn new<R: Rng + ?Sized>(obs_scale: Vec<f64>, n_actions: usize, hidden: &[usize], lr: f64, rng: &mut R) -> Self {
        HerA2c {
            policy: SoftmaxPolicy::new(obs_scale.clone(), n_actions, hidden, lr, rng),
            value: ValueNet::new(obs_scale.clone(), hidden, lr, rng),
            gamma: GAMMA,
            entropy_coef: ENTROPY_COEF,
            scale: obs_scale,
            behaviour: BTreeMap::new(),
            pending: Vec::new(),
        }
    }

    /// Samples from the softmax policy and records the probability of the
    /// drawn action for the trajectory in progress.
    pub fn act_behaviour<R: Rng + ?Sized>(&mut self, s: &[f64], g: &[f64], rng: &mut R) -> Result<usize> {
        let p = self.policy.probs(s, g)?;
        let a = self.policy.act_sample(s, g, rng)?;
        self.pending.push(p[a]);
        Ok(a)
    }

    /// Files the recorded probabilities under `id` and forgets trajectories
    /// older than `oldest_live`.
    pub fn commit_trajectory(&mut self, id: u64, oldest_live: u64) {
        if !self.pending.is_empty() {
            self.behaviour.insert(id, std::mem::take(&mut self.pending));
        }
        self.behaviour = self.behaviour.split_off(&oldest_live);
    }

    /// Recorded behaviour probability of step `t`; uniform when the
    /// trajectory was not collected by [`HerA2c::act_behaviour`].
    pub fn behaviour_prob(&self, trajectory_id: u64, t: usize) -> f64 {
        self.behaviour
            .get(&trajectory_id)
            .and_then(|v| v.get(t).copied())
            .unwrap_or(1.0 / self.policy.n_actions() as f64)
    }

    /// Critic TD step and actor step on `-rho * A * log pi(a_t) - c H(pi)`
    /// with `rho` and `A` held constant; returns `(actor_loss, critic_loss)`.
    pub fn her_a2c_update(&mut self, batch: &[Transition]) -> Result<(f64, f64)> {
        let td: Vec<TdRow> = batch
            .iter()
            .map(|t| {
                let r = a2c_reward(&self.scale, &t.state, &t.goal);
                (t.state.as_slice(), t.next_state.as_slice(), t.goal.as_slice(), r)
            })
            .collect();
        let (critic_loss, adv) = self.value.td_step(&td, self.gamma)?;
        let rows = batch
            .iter()
            .zip(&adv)
            .map(|(t, &a)| Ok((t.state.as_slice(), t.goal.as_slice(), discrete_action(&t.action)?, a)))
            .collect::<Result<Vec<WeightedRow>>>()?;
        let mu: Vec<f64> = batch.iter().map(|t| self.behaviour_prob(t.trajectory_id, t.t)).collect();
        let actor_loss = self.policy.weighted_nll_entropy_step(&rows, self.entropy_coef, Some(&mu))?;
        Ok((actor_loss, critic_loss))
    }
}
