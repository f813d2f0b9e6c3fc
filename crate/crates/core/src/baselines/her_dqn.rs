use rand::Rng;

use crate::error::{check_dim, Error, Result};
use crate::features::{argmax, Features};
use crate::nn::{AdamState, DenseNet, Grads, OutputActivation};
use crate::replay::Transition;

use super::common::scaled_distance;
use super::gcsl::discrete_action;

pub const EPSILON: f64 = 0.001;
pub const GAMMA: f64 = 0.99;

/// `r_t = -||s_t - g||` in scaled observation units.
pub fn dqn_reward(scale: &[f64], s: &[f64], g: &[f64]) -> f64 {
    -scaled_distance(scale, s, g)
}

/// DQN over relabelled and original goals with a hard-synced target copy.
#[derive(Debug, Clone)]
pub struct HerDqn {
    q: DenseNet,
    target: DenseNet,
    adam: AdamState,
    features: Features,
    scale: Vec<f64>,
    pub gamma: f64,
    pub epsilon: f64,
}

impl HerDqn {
    pub fn new<R: Rng + ?Sized>(obs_scale: Vec<f64>, n_actions: usize, hidden: &[usize], lr: f64, rng: &mut R) -> Self {
        let q = DenseNet::mlp(2 * obs_scale.len(), hidden, n_actions, OutputActivation::Linear, rng);
        Self::from_net(q, obs_scale, lr).expect("fresh network matches feature width")
    }

    pub fn from_net(q: DenseNet, obs_scale: Vec<f64>, lr: f64) -> Result<Self> {
        check_dim(2 * obs_scale.len(), q.input_dim())?;
        Ok(HerDqn {
            target: q.clone(),
            adam: AdamState::for_net(&q, lr),
            q,
            features: Features::new(obs_scale.clone()),
            scale: obs_scale,
            gamma: GAMMA,
            epsilon: EPSILON,
        })
    }

    pub fn net(&self) -> &DenseNet {
        &self.q
    }

    pub fn target(&self) -> &DenseNet {
        &self.target
    }

    pub fn q_values(&self, s: &[f64], g: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.features.obs_dim(), s.len())?;
        check_dim(self.features.obs_dim(), g.len())?;
        self.q.forward(&self.features.pair(s, g))
    }

    pub fn act_greedy(&self, s: &[f64], g: &[f64]) -> Result<usize> {
        Ok(argmax(&self.q_values(s, g)?))
    }

    pub fn act_epsilon_greedy<R: Rng + ?Sized>(&self, s: &[f64], g: &[f64], rng: &mut R) -> Result<usize> {
        if rng.random::<f64>() < self.epsilon {
            Ok(rng.random_range(0..self.q.output_dim()))
        } else {
            self.act_greedy(s, g)
        }
    }

    /// Copies the live parameters into the target network.
    pub fn sync_target(&mut self) {
        self.target = self.q.clone();
    }

    /// Squared TD error against `r + gamma * max_a' Q_target(s', a', g)` and
    /// its gradient.
    pub fn td(&self, batch: &[Transition]) -> Result<(f64, Grads)> {
        if batch.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let n_act = self.q.output_dim();
        let mut cur = Vec::with_capacity(batch.len() * 2 * self.features.obs_dim());
        let mut next = Vec::with_capacity(cur.capacity());
        for tr in batch {
            check_dim(self.features.obs_dim(), tr.state.len())?;
            self.features.push_pair(&mut cur, &tr.state, &tr.goal);
            self.features.push_pair(&mut next, &tr.next_state, &tr.goal);
        }
        let q_next = self.target.forward_batch(&next, batch.len())?;
        let tape = self.q.forward_tape(&cur, batch.len())?;
        let q = tape.output();
        let n = batch.len() as f64;
        let mut loss = 0.0;
        let mut grad = vec![0.0; q.len()];
        for (b, tr) in batch.iter().enumerate() {
            let a = discrete_action(&tr.action)?;
            let best = q_next[b * n_act..(b + 1) * n_act].iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
            let y = dqn_reward(&self.scale, &tr.state, &tr.goal) + self.gamma * best;
            let err = q[b * n_act + a] - y;
            loss += err * err;
            grad[b * n_act + a] = 2.0 * err / n;
        }
        let mut grads = Grads::zeros_like(&self.q);
        self.q.backward_tape(&tape, &grad, &mut grads, false)?;
        Ok((loss / n, grads))
    }

    pub fn her_dqn_update(&mut self, batch: &[Transition]) -> Result<f64> {
        let (loss, grads) = self.td(batch)?;
        self.adam.step(&mut self.q, &grads)?;
        Ok(loss)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use crate::env::Action;
    use crate::replay::GoalSource;

    fn transition(s: [f64; 2], g: [f64; 2]) -> Transition {
        Transition {
            state: s.to_vec(),
            action: Action::Discrete(1),
            next_state: s.to_vec(),
            goal: g.to_vec(),
            source: GoalSource::Original,
            t: 0,
            trajectory_id: 0,
        }
    }

    #[test]
    fn reward_and_constants() {
        assert_eq!(dqn_reward(&[1.0, 1.0], &[0.3, 0.3], &[0.3, 0.3]), 0.0);
        assert!((dqn_reward(&[1.0, 1.0], &[0.3, 0.4], &[0.0, 0.0]) + 0.5).abs() < 1e-12);
        assert_eq!(EPSILON, 0.001);
        assert_eq!(GAMMA, 0.99);
    }

    #[test]
    fn zero_loss_at_fixed_point() {
        // Q = 0, s_t = g gives r = 0 and a zero target
        let agent = HerDqn::from_net(DenseNet::zeros(&[4, 3, 5], OutputActivation::Linear), vec![1.0; 2], 1e-3).unwrap();
        let (loss, g) = agent.td(&[transition([0.2, 0.2], [0.2, 0.2])]).unwrap();
        assert_eq!(loss, 0.0);
        assert_eq!(g.max_abs(), 0.0);
    }

    #[test]
    fn target_moves_only_on_sync() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut agent = HerDqn::new(vec![1.0; 2], 5, &[8], 1e-3, &mut rng);
        let frozen = agent.target().params().to_vec();
        agent.her_dqn_update(&[transition([0.2, 0.2], [0.9, -0.1])]).unwrap();
        assert_eq!(agent.target().params(), &frozen[..]);
        agent.sync_target();
        assert_eq!(agent.target().params(), agent.net().params());
    }

    #[test]
    fn exploration_is_rare() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let agent = HerDqn::new(vec![1.0; 2], 5, &[8], 1e-3, &mut rng);
        let greedy = agent.act_greedy(&[0.1, 0.1], &[0.5, 0.5]).unwrap();
        let off = (0..20_000)
            .filter(|_| agent.act_epsilon_greedy(&[0.1, 0.1], &[0.5, 0.5], &mut rng).unwrap() != greedy)
            .count();
        // expected 20000 * 0.001 * 4/5 = 16
        assert!(off < 60, "{off}");
    }
}
