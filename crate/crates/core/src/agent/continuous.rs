use rand::Rng;

use crate::distance::DistanceModel;
use crate::error::{check_dim, Error, Result};
use crate::features::Features;
use crate::nn::{actor_gradient, bce, bce_grad, AdamState, DenseNet, Grads, OutputActivation};
use crate::replay::{OriginalTuple, RelabeledTuple};

use super::{ALPHA, BETA, GAMMA};

/// Critic `Q(a, s, g)` with a deterministic actor `pi(s, g)` in `[0, 1]^d`.
#[derive(Debug, Clone)]
pub struct ContinuousPolicyPair {
    critic: DenseNet,
    actor: DenseNet,
    critic_adam: AdamState,
    actor_adam: AdamState,
    features: Features,
    pub alpha: f64,
    pub gamma: f64,
    pub beta_positive: f64,
    pub beta_original: f64,
}

fn action_values(a: &crate::env::Action, dim: usize) -> Result<&[f64]> {
    match a.values() {
        Some(v) if v.len() == dim => Ok(v),
        _ => Err(Error::InvalidAction {
            env: "continuous policy",
            detail: format!("{a:?}"),
        }),
    }
}

impl ContinuousPolicyPair {
    pub fn new<R: Rng + ?Sized>(obs_scale: Vec<f64>, action_dim: usize, hidden: &[usize], lr: f64, rng: &mut R) -> Self {
        let d = obs_scale.len();
        let critic = DenseNet::mlp(action_dim + 2 * d, hidden, 1, OutputActivation::Logistic, rng);
        let actor = DenseNet::mlp(2 * d, hidden, action_dim, OutputActivation::Logistic, rng);
        Self::from_nets(critic, actor, obs_scale, lr).expect("fresh networks match feature width")
    }

    pub fn from_nets(critic: DenseNet, actor: DenseNet, obs_scale: Vec<f64>, lr: f64) -> Result<Self> {
        let d = obs_scale.len();
        check_dim(2 * d, actor.input_dim())?;
        check_dim(actor.output_dim() + 2 * d, critic.input_dim())?;
        check_dim(1, critic.output_dim())?;
        if actor.output_activation() != OutputActivation::Logistic || critic.output_activation() != OutputActivation::Logistic {
            return Err(Error::Config("actor and critic need logistic outputs".into()));
        }
        Ok(ContinuousPolicyPair {
            critic_adam: AdamState::for_net(&critic, lr),
            actor_adam: AdamState::for_net(&actor, lr),
            critic,
            actor,
            features: Features::new(obs_scale),
            alpha: ALPHA,
            gamma: GAMMA,
            beta_positive: BETA,
            beta_original: BETA,
        })
    }

    pub fn critic(&self) -> &DenseNet {
        &self.critic
    }

    pub fn actor(&self) -> &DenseNet {
        &self.actor
    }

    pub fn action_dim(&self) -> usize {
        self.actor.output_dim()
    }

    fn push_sg(&self, out: &mut Vec<f64>, s: &[f64], g: &[f64]) -> Result<()> {
        check_dim(self.features.obs_dim(), s.len())?;
        check_dim(self.features.obs_dim(), g.len())?;
        self.features.push_pair(out, s, g);
        Ok(())
    }

    pub fn act(&self, s: &[f64], g: &[f64]) -> Result<Vec<f64>> {
        let mut x = Vec::new();
        self.push_sg(&mut x, s, g)?;
        self.actor.forward(&x)
    }

    fn act_batch(&self, rows: &[(&[f64], &[f64])]) -> Result<Vec<f64>> {
        let mut x = Vec::with_capacity(rows.len() * 2 * self.features.obs_dim());
        for (s, g) in rows {
            self.push_sg(&mut x, s, g)?;
        }
        self.actor.forward_batch(&x, rows.len())
    }

    pub fn critic_value(&self, a: &[f64], s: &[f64], g: &[f64]) -> Result<f64> {
        check_dim(self.action_dim(), a.len())?;
        let mut x = a.to_vec();
        self.push_sg(&mut x, s, g)?;
        Ok(self.critic.forward(&x)?[0])
    }

    /// Critic losses `(L+, L_o)` and the critic gradient of their weighted
    /// sum. `L+` imitates `a_t` and pushes the actor's proposal (held fixed)
    /// toward 0 with weight `alpha`; `L_o` matches the discounted `p_phi`
    /// target at the original goal.
    pub fn critic_breakdown(
        &self,
        expert: &[RelabeledTuple],
        original: &[OriginalTuple],
        distance: Option<&DistanceModel>,
    ) -> Result<(f64, f64, Grads)> {
        if expert.is_empty() && original.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let dim = self.action_dim();
        let targets = match (original.is_empty(), distance) {
            (true, _) => Vec::new(),
            (false, Some(d)) => {
                let pairs: Vec<(&[f64], &[f64])> = original
                    .iter()
                    .map(|o| (o.final_state.as_slice(), o.goal.as_slice()))
                    .collect();
                d.eval_batch(&pairs)?
            }
            (false, None) => return Err(Error::Config("original-goal loss needs a distance model".into())),
        };
        let sg: Vec<(&[f64], &[f64])> = expert.iter().map(|e| (e.state.as_slice(), e.goal.as_slice())).collect();
        let proposals = self.act_batch(&sg)?;

        // rows: expert imitation, expert regularisation, original goal
        let rows = 2 * expert.len() + original.len();
        let mut x = Vec::with_capacity(rows * self.critic.input_dim());
        for e in expert {
            x.extend_from_slice(action_values(&e.action, dim)?);
            self.push_sg(&mut x, &e.state, &e.goal)?;
        }
        for (k, e) in expert.iter().enumerate() {
            x.extend_from_slice(&proposals[k * dim..(k + 1) * dim]);
            self.push_sg(&mut x, &e.state, &e.goal)?;
        }
        for o in original {
            x.extend_from_slice(action_values(&o.action, dim)?);
            self.push_sg(&mut x, &o.state, &o.goal)?;
        }
        let tape = self.critic.forward_tape(&x, rows)?;
        let q = tape.output();
        let mut grad = vec![0.0; rows];
        let n_e = expert.len();

        let mut l_plus = 0.0;
        if n_e > 0 {
            let w = self.beta_positive / n_e as f64;
            for k in 0..n_e {
                l_plus += bce(q[k], 1.0) + self.alpha * bce(q[n_e + k], 0.0);
                grad[k] = w * bce_grad(q[k], 1.0);
                grad[n_e + k] = w * self.alpha * bce_grad(q[n_e + k], 0.0);
            }
            l_plus /= n_e as f64;
        }
        let mut l_o = 0.0;
        if !original.is_empty() {
            let w = self.beta_original / original.len() as f64;
            for (k, (o, &p)) in original.iter().zip(&targets).enumerate() {
                let r = 2 * n_e + k;
                let discount = self.gamma.powi((o.horizon - o.t) as i32);
                l_o += discount * bce(q[r], p);
                grad[r] = w * discount * bce_grad(q[r], p);
            }
            l_o /= original.len() as f64;
        }
        let mut grads = Grads::zeros_like(&self.critic);
        self.critic.backward_tape(&tape, &grad, &mut grads, false)?;
        Ok((l_plus, l_o, grads))
    }

    /// One Adam step on the critic; returns `(L+, L_o)` before the step.
    pub fn continuous_critic_loss(
        &mut self,
        expert: &[RelabeledTuple],
        original: &[OriginalTuple],
        distance: &DistanceModel,
    ) -> Result<(f64, f64)> {
        if expert.is_empty() || original.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let expert = if self.beta_positive == 0.0 { &[][..] } else { expert };
        let original = if self.beta_original == 0.0 { &[][..] } else { original };
        let (lp, lo, grads) = self.critic_breakdown(expert, original, Some(distance))?;
        self.critic_adam.step(&mut self.critic, &grads)?;
        Ok((lp, lo))
    }

    /// `-mean Q(pi(s, g), s, g)` and its actor gradient, backpropagated
    /// through the critic with the critic's parameters held constant.
    pub fn actor_breakdown(&self, rows: &[(&[f64], &[f64])]) -> Result<(f64, Grads)> {
        if rows.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let dim = self.action_dim();
        let mut sg = Vec::with_capacity(rows.len() * 2 * self.features.obs_dim());
        for (s, g) in rows {
            self.push_sg(&mut sg, s, g)?;
        }
        let mut x = Vec::with_capacity(rows.len() * self.critic.input_dim());
        for chunk in sg.chunks_exact(2 * self.features.obs_dim()) {
            x.extend(std::iter::repeat_n(0.0, dim));
            x.extend_from_slice(chunk);
        }
        let n = rows.len() as f64;
        actor_gradient(&self.actor, &sg, &self.critic, x, 0, rows.len(), |q| {
            (-q.iter().sum::<f64>() / n, vec![-1.0 / n; q.len()])
        })
    }

    /// One Adam step on the actor only; returns the loss before the step.
    pub fn continuous_actor_loss(&mut self, rows: &[(&[f64], &[f64])]) -> Result<f64> {
        let (loss, grads) = self.actor_breakdown(rows)?;
        self.actor_adam.step(&mut self.actor, &grads)?;
        Ok(loss)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use crate::env::Action;

    fn expert(a: [f64; 2], s: f64) -> RelabeledTuple {
        RelabeledTuple {
            state: vec![s, 0.1],
            action: Action::Continuous(a.to_vec()),
            next_state: vec![s + 0.02, 0.1],
            goal: vec![0.5, -0.4],
            t: 1,
            offset: 2,
            horizon: 8,
            trajectory_id: 0,
        }
    }

    fn original(a: [f64; 2], t: usize) -> OriginalTuple {
        OriginalTuple {
            state: vec![-0.1, 0.3],
            action: Action::Continuous(a.to_vec()),
            final_state: vec![0.2, 0.2],
            goal: vec![0.6, 0.1],
            t,
            horizon: 8,
            trajectory_id: 1,
        }
    }

    fn pair(seed: u64) -> (ContinuousPolicyPair, DistanceModel) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = ContinuousPolicyPair::new(vec![1.0, 1.0], 2, &[6, 5], 1e-3, &mut rng);
        let d = DistanceModel::new(vec![1.0, 1.0], &[4], 1e-3, 5, &mut rng);
        (p, d)
    }

    #[test]
    fn constant_critic_arithmetic() {
        let (p, _) = pair(0);
        let p = ContinuousPolicyPair::from_nets(
            DenseNet::zeros(&[6, 3, 1], OutputActivation::Logistic),
            p.actor().clone(),
            vec![1.0, 1.0],
            1e-3,
        )
        .unwrap();
        let (lp, _, _) = p.critic_breakdown(&[expert([0.2, 0.7], 0.0)], &[], None).unwrap();
        assert!((lp - (1.0 + ALPHA) * std::f64::consts::LN_2).abs() < 1e-10);
        let mut q = p.clone();
        q.alpha = 0.0;
        let (lp, _, _) = q.critic_breakdown(&[expert([0.2, 0.7], 0.0)], &[], None).unwrap();
        assert!((lp - std::f64::consts::LN_2).abs() < 1e-10);
        // a critic blind to its action argument gives the actor nothing to follow
        let (loss, g) = p.actor_breakdown(&[(&[0.1, 0.2], &[0.3, 0.4])]).unwrap();
        assert!((loss + 0.5).abs() < 1e-12);
        assert_eq!(g.max_abs(), 0.0);
    }

    #[test]
    fn critic_gradient_matches_differences() {
        let (p, d) = pair(1);
        let e = [expert([0.2, 0.7], 0.0), expert([0.9, 0.1], 0.3)];
        let o = [original([0.4, 0.4], 5), original([0.1, 0.8], 8)];
        let (_, _, grads) = p.critic_breakdown(&e, &o, Some(&d)).unwrap();
        let total = |q: &ContinuousPolicyPair| {
            let (a, b, _) = q.critic_breakdown(&e, &o, Some(&d)).unwrap();
            a + b
        };
        let h = 1e-5;
        for i in 0..p.critic.param_count() {
            let mut up = p.clone();
            up.critic.params_mut()[i] += h;
            let mut dn = p.clone();
            dn.critic.params_mut()[i] -= h;
            let fd = (total(&up) - total(&dn)) / (2.0 * h);
            let g = grads.0[i];
            assert!((fd - g).abs() <= 1e-4 * fd.abs().max(g.abs()).max(1e-3), "param {i}: {fd} vs {g}");
        }
    }

    #[test]
    fn actor_gradient_matches_differences() {
        let (p, _) = pair(2);
        let rows: [(&[f64], &[f64]); 3] = [(&[0.1, 0.2], &[0.3, 0.4]), (&[-0.5, 0.0], &[0.9, -0.9]), (&[0.0, 0.7], &[0.2, 0.2])];
        let (_, grads) = p.actor_breakdown(&rows).unwrap();
        let h = 1e-5;
        for i in 0..p.actor.param_count() {
            let mut up = p.clone();
            up.actor.params_mut()[i] += h;
            let mut dn = p.clone();
            dn.actor.params_mut()[i] -= h;
            let fd = (up.actor_breakdown(&rows).unwrap().0 - dn.actor_breakdown(&rows).unwrap().0) / (2.0 * h);
            let g = grads.0[i];
            assert!((fd - g).abs() <= 1e-4 * fd.abs().max(g.abs()).max(1e-3), "param {i}: {fd} vs {g}");
        }
    }

    #[test]
    fn updates_touch_only_their_own_network() {
        let (mut p, d) = pair(3);
        let critic = p.critic().params().to_vec();
        let actor = p.actor().params().to_vec();
        let distance = d.net().params().to_vec();
        p.continuous_actor_loss(&[(&[0.1, 0.2], &[0.3, 0.4])]).unwrap();
        assert_eq!(p.critic().params(), &critic[..]);
        assert_ne!(p.actor().params(), &actor[..]);
        let actor = p.actor().params().to_vec();
        p.continuous_critic_loss(&[expert([0.2, 0.7], 0.0)], &[original([0.4, 0.4], 5)], &d)
            .unwrap();
        assert_eq!(p.actor().params(), &actor[..]);
        assert_eq!(d.net().params(), &distance[..]);
        assert_ne!(p.critic().params(), &critic[..]);
    }

    #[test]
    fn actor_outputs_stay_in_box() {
        let (p, _) = pair(4);
        for k in 0..20 {
            let x = k as f64 / 10.0 - 1.0;
            let a = p.act(&[x, -x], &[0.3 * x, 0.5]).unwrap();
            assert!(a.iter().all(|v| (0.0..=1.0).contains(v)));
        }
        assert!(p.act(&[0.0], &[0.0, 0.0]).is_err());
    }
}
