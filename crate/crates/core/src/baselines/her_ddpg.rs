use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{check_dim, Error, Result};
use crate::features::Features;
use crate::nn::{actor_gradient, AdamState, DenseNet, Grads, OutputActivation};
use crate::replay::Transition;

use super::common::scaled_distance;

pub const GAMMA: f64 = 0.99;
/// Polyak rate of the target networks.
pub const TAU: f64 = 0.005;
pub const EXPLORATION_STD: f64 = 0.1;

/// `r_t = -||s_t - g||` in scaled observation units.
pub fn ddpg_reward(scale: &[f64], s: &[f64], g: &[f64]) -> f64 {
    -scaled_distance(scale, s, g)
}

/// Deterministic actor and `Q(a, s, g)` critic with Polyak-averaged targets.
#[derive(Debug, Clone)]
pub struct HerDdpg {
    actor: DenseNet,
    critic: DenseNet,
    actor_target: DenseNet,
    critic_target: DenseNet,
    actor_adam: AdamState,
    critic_adam: AdamState,
    features: Features,
    scale: Vec<f64>,
    pub gamma: f64,
    pub tau: f64,
    pub noise_std: f64,
}

impl HerDdpg {
    pub fn new<R: Rng + ?Sized>(obs_scale: Vec<f64>, action_dim: usize, hidden: &[usize], lr: f64, rng: &mut R) -> Self {
        let d = obs_scale.len();
        let actor = DenseNet::mlp(2 * d, hidden, action_dim, OutputActivation::Logistic, rng);
        let critic = DenseNet::mlp(action_dim + 2 * d, hidden, 1, OutputActivation::Linear, rng);
        HerDdpg {
            actor_target: actor.clone(),
            critic_target: critic.clone(),
            actor_adam: AdamState::for_net(&actor, lr),
            critic_adam: AdamState::for_net(&critic, lr),
            actor,
            critic,
            features: Features::new(obs_scale.clone()),
            scale: obs_scale,
            gamma: GAMMA,
            tau: TAU,
            noise_std: EXPLORATION_STD,
        }
    }

    pub fn actor(&self) -> &DenseNet {
        &self.actor
    }

    pub fn critic(&self) -> &DenseNet {
        &self.critic
    }

    pub fn actor_target(&self) -> &DenseNet {
        &self.actor_target
    }

    fn action_dim(&self) -> usize {
        self.actor.output_dim()
    }

    fn sg(&self, s: &[f64], g: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.features.obs_dim(), s.len())?;
        check_dim(self.features.obs_dim(), g.len())?;
        Ok(self.features.pair(s, g))
    }

    pub fn act(&self, s: &[f64], g: &[f64]) -> Result<Vec<f64>> {
        self.actor.forward(&self.sg(s, g)?)
    }

    /// Actor output plus `N(0, noise_std)` per component, clipped to `[0, 1]`.
    pub fn act_noisy<R: Rng + ?Sized>(&self, s: &[f64], g: &[f64], rng: &mut R) -> Result<Vec<f64>> {
        let noise = Normal::new(0.0, self.noise_std).map_err(|e| Error::Config(e.to_string()))?;
        Ok(self
            .act(s, g)?
            .into_iter()
            .map(|a| (a + noise.sample(rng)).clamp(0.0, 1.0))
            .collect())
    }

    pub fn q_value(&self, a: &[f64], s: &[f64], g: &[f64]) -> Result<f64> {
        check_dim(self.action_dim(), a.len())?;
        let mut x = a.to_vec();
        x.extend(self.sg(s, g)?);
        Ok(self.critic.forward(&x)?[0])
    }

    /// Squared TD error against `r + gamma Q'(pi'(s', g), s', g)`.
    pub fn critic_td(&self, batch: &[Transition]) -> Result<(f64, Grads)> {
        if batch.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let d = self.action_dim();
        let obs = self.features.obs_dim();
        let mut next_sg = Vec::with_capacity(batch.len() * 2 * obs);
        let mut cur = Vec::with_capacity(batch.len() * (d + 2 * obs));
        for tr in batch {
            let a = tr.action.values().ok_or_else(|| Error::InvalidAction {
                env: "continuous learner",
                detail: format!("{:?}", tr.action),
            })?;
            check_dim(d, a.len())?;
            cur.extend_from_slice(a);
            cur.extend(self.sg(&tr.state, &tr.goal)?);
            next_sg.extend(self.sg(&tr.next_state, &tr.goal)?);
        }
        let a_next = self.actor_target.forward_batch(&next_sg, batch.len())?;
        let mut next = Vec::with_capacity(cur.len());
        for (a, sg) in a_next.chunks_exact(d).zip(next_sg.chunks_exact(2 * obs)) {
            next.extend_from_slice(a);
            next.extend_from_slice(sg);
        }
        let q_next = self.critic_target.forward_batch(&next, batch.len())?;
        let tape = self.critic.forward_tape(&cur, batch.len())?;
        let n = batch.len() as f64;
        let errs: Vec<f64> = batch
            .iter()
            .zip(tape.output().iter().zip(&q_next))
            .map(|(tr, (q, qn))| q - (ddpg_reward(&self.scale, &tr.state, &tr.goal) + self.gamma * qn))
            .collect();
        let loss = errs.iter().map(|e| e * e).sum::<f64>() / n;
        let grad: Vec<f64> = errs.iter().map(|e| 2.0 * e / n).collect();
        let mut grads = Grads::zeros_like(&self.critic);
        self.critic.backward_tape(&tape, &grad, &mut grads, false)?;
        Ok((loss, grads))
    }

    /// `-mean Q(pi(s, g), s, g)` through the live critic.
    pub fn actor_loss(&self, batch: &[Transition]) -> Result<(f64, Grads)> {
        if batch.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let d = self.action_dim();
        let mut sg = Vec::with_capacity(batch.len() * 2 * self.features.obs_dim());
        let mut x = Vec::with_capacity(batch.len() * self.critic.input_dim());
        for tr in batch {
            let row = self.sg(&tr.state, &tr.goal)?;
            x.extend(std::iter::repeat_n(0.0, d));
            x.extend_from_slice(&row);
            sg.extend(row);
        }
        let n = batch.len() as f64;
        actor_gradient(&self.actor, &sg, &self.critic, x, 0, batch.len(), |q| {
            (-q.iter().sum::<f64>() / n, vec![-1.0 / n; q.len()])
        })
    }

    /// Critic step, actor step, then Polyak update of both targets; returns
    /// `(actor_loss, critic_loss)`.
    pub fn her_ddpg_update(&mut self, batch: &[Transition]) -> Result<(f64, f64)> {
        let (critic_loss, g) = self.critic_td(batch)?;
        self.critic_adam.step(&mut self.critic, &g)?;
        let (actor_loss, g) = self.actor_loss(batch)?;
        self.actor_adam.step(&mut self.actor, &g)?;
        self.critic_target.soft_update_from(&self.critic, self.tau);
        self.actor_target.soft_update_from(&self.actor, self.tau);
        Ok((actor_loss, critic_loss))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use crate::env::Action;
    use crate::replay::GoalSource;

    fn batch() -> Vec<Transition> {
        (0..5)
            .map(|k| Transition {
                state: vec![k as f64 * 0.1, -0.2],
                action: Action::Continuous(vec![0.1 * k as f64, 0.5, 0.9, 0.3]),
                next_state: vec![k as f64 * 0.1 + 0.03, -0.2],
                goal: vec![0.4, 0.1],
                source: GoalSource::Relabeled,
                t: k,
                trajectory_id: 1,
            })
            .collect()
    }

    #[test]
    fn critic_gradient_matches_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let agent = HerDdpg::new(vec![1.0; 2], 4, &[6], 1e-3, &mut rng);
        let b = batch();
        let (_, g) = agent.critic_td(&b).unwrap();
        let h = 1e-6;
        for i in (0..agent.critic.param_count()).step_by(3) {
            let nudge = |delta: f64| {
                let mut c = agent.clone();
                c.critic.params_mut()[i] += delta;
                c.critic_td(&b).unwrap().0
            };
            let fd = (nudge(h) - nudge(-h)) / (2.0 * h);
            assert!((fd - g.0[i]).abs() < 1e-6, "{i}: {fd} vs {}", g.0[i]);
        }
    }

    #[test]
    fn actor_gradient_matches_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let agent = HerDdpg::new(vec![1.0; 2], 4, &[6], 1e-3, &mut rng);
        let b = batch();
        let (_, g) = agent.actor_loss(&b).unwrap();
        let h = 1e-6;
        for i in (0..agent.actor.param_count()).step_by(3) {
            let nudge = |delta: f64| {
                let mut c = agent.clone();
                c.actor.params_mut()[i] += delta;
                c.actor_loss(&b).unwrap().0
            };
            let fd = (nudge(h) - nudge(-h)) / (2.0 * h);
            assert!((fd - g.0[i]).abs() < 1e-6, "{i}: {fd} vs {}", g.0[i]);
        }
    }

    #[test]
    fn targets_track_slowly() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut agent = HerDdpg::new(vec![1.0; 2], 4, &[6], 1e-2, &mut rng);
        let before = agent.actor_target().params().to_vec();
        let live_before = agent.actor().params().to_vec();
        agent.her_ddpg_update(&batch()).unwrap();
        for ((t0, t1), (l0, l1)) in before
            .iter()
            .zip(agent.actor_target().params())
            .zip(live_before.iter().zip(agent.actor().params()))
        {
            // target moved by tau of the live step
            assert!(((t1 - t0) - TAU * (l1 - l0)).abs() < 1e-12);
        }
    }

    #[test]
    fn noisy_actions_stay_in_box() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut agent = HerDdpg::new(vec![1.0; 2], 4, &[6], 1e-3, &mut rng);
        agent.noise_std = 2.0;
        for _ in 0..200 {
            let a = agent.act_noisy(&[0.0, 0.0], &[0.5, 0.5], &mut rng).unwrap();
            assert!(a.iter().all(|v| (0.0..=1.0).contains(v)));
        }
        assert_eq!(ddpg_reward(&[1.0, 1.0], &[0.1, 0.1], &[0.1, 0.1]), 0.0);
    }
}
