use rand::Rng;

use crate::distance::DistanceModel;
use crate::error::{check_dim, Error, Result};
use crate::features::{argmax, Features};
use crate::nn::{bce, bce_grad, AdamState, DenseNet, Grads, OutputActivation, Tape};
use crate::replay::{OriginalTuple, RelabeledTuple};

use super::{ALPHA, BETA, GAMMA};

/// `Q(a, s, g)`: one logistic success probability per discrete action.
#[derive(Debug, Clone)]
pub struct DiscretePolicy {
    net: DenseNet,
    adam: AdamState,
    features: Features,
    pub alpha: f64,
    pub gamma: f64,
    /// Weight of the relabelled-goal loss.
    pub beta_positive: f64,
    /// Weight of the original-goal loss.
    pub beta_original: f64,
}

/// Both loss components and their combined gradient.
#[derive(Debug, Clone)]
pub struct LossBreakdown {
    pub l_plus: f64,
    pub l_o: f64,
    pub grads: Grads,
}

fn action_index(a: &crate::env::Action, n_actions: usize) -> Result<usize> {
    match a.index() {
        Some(i) if i < n_actions => Ok(i),
        _ => Err(Error::InvalidAction {
            env: "discrete policy",
            detail: format!("{a:?}"),
        }),
    }
}

impl DiscretePolicy {
    pub fn new<R: Rng + ?Sized>(obs_scale: Vec<f64>, n_actions: usize, hidden: &[usize], lr: f64, rng: &mut R) -> Self {
        let net = DenseNet::mlp(2 * obs_scale.len(), hidden, n_actions, OutputActivation::Logistic, rng);
        Self::from_net(net, obs_scale, lr).expect("fresh network matches feature width")
    }

    pub fn from_net(net: DenseNet, obs_scale: Vec<f64>, lr: f64) -> Result<Self> {
        check_dim(2 * obs_scale.len(), net.input_dim())?;
        if net.output_activation() != OutputActivation::Logistic {
            return Err(Error::Config("policy network needs logistic outputs".into()));
        }
        Ok(DiscretePolicy {
            adam: AdamState::for_net(&net, lr),
            net,
            features: Features::new(obs_scale),
            alpha: ALPHA,
            gamma: GAMMA,
            beta_positive: BETA,
            beta_original: BETA,
        })
    }

    pub fn net(&self) -> &DenseNet {
        &self.net
    }

    pub fn n_actions(&self) -> usize {
        self.net.output_dim()
    }

    pub fn q_values(&self, s: &[f64], g: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.features.obs_dim(), s.len())?;
        check_dim(self.features.obs_dim(), g.len())?;
        self.net.forward(&self.features.pair(s, g))
    }

    /// Greedy action; ties go to the lowest index.
    pub fn act_discrete(&self, s: &[f64], g: &[f64]) -> Result<usize> {
        Ok(argmax(&self.q_values(s, g)?))
    }

    fn tape_for<'a>(&self, rows: impl Iterator<Item = (&'a [f64], &'a [f64])>, batch: usize) -> Result<Tape> {
        let mut input = Vec::with_capacity(batch * 2 * self.features.obs_dim());
        for (s, g) in rows {
            check_dim(self.features.obs_dim(), s.len())?;
            check_dim(self.features.obs_dim(), g.len())?;
            self.features.push_pair(&mut input, s, g);
        }
        self.net.forward_tape(&input, batch)
    }

    /// Mean of `H(Q(a_t, s_t, g'), 1) + alpha * sum_a H(Q(a, s_t, g'), 0)`,
    /// the sum running over every action including `a_t`.
    pub fn loss_positive(&self, batch: &[RelabeledTuple]) -> Result<f64> {
        Ok(self.breakdown(batch, &[], None)?.l_plus)
    }

    /// Mean of `gamma^(T - t) * H(Q(a_t, s_t, g), p_phi(s_T, g))`.
    pub fn loss_original(&self, batch: &[OriginalTuple], distance: &DistanceModel) -> Result<f64> {
        Ok(self.breakdown(&[], batch, Some(distance))?.l_o)
    }

    /// Evaluates both losses in one pass and accumulates the gradient of
    /// `beta_positive * L+ + beta_original * L_o`. An empty batch contributes
    /// a zero loss; `distance` must be present when `original` is not empty.
    pub fn breakdown(
        &self,
        expert: &[RelabeledTuple],
        original: &[OriginalTuple],
        distance: Option<&DistanceModel>,
    ) -> Result<LossBreakdown> {
        if expert.is_empty() && original.is_empty() {
            return Err(Error::EmptyBatch);
        }
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
        let n_act = self.n_actions();
        let rows = expert.len() + original.len();
        let tape = self.tape_for(
            expert
                .iter()
                .map(|e| (e.state.as_slice(), e.goal.as_slice()))
                .chain(original.iter().map(|o| (o.state.as_slice(), o.goal.as_slice()))),
            rows,
        )?;
        let q = tape.output();
        let mut grad = vec![0.0; rows * n_act];

        let mut l_plus = 0.0;
        if !expert.is_empty() {
            let w = self.beta_positive / expert.len() as f64;
            for (b, e) in expert.iter().enumerate() {
                let a_t = action_index(&e.action, n_act)?;
                let row = &q[b * n_act..(b + 1) * n_act];
                let g = &mut grad[b * n_act..(b + 1) * n_act];
                l_plus += bce(row[a_t], 1.0);
                g[a_t] += w * bce_grad(row[a_t], 1.0);
                for (a, &qa) in row.iter().enumerate() {
                    l_plus += self.alpha * bce(qa, 0.0);
                    g[a] += w * self.alpha * bce_grad(qa, 0.0);
                }
            }
            l_plus /= expert.len() as f64;
        }

        let mut l_o = 0.0;
        if !original.is_empty() {
            let w = self.beta_original / original.len() as f64;
            for (k, (o, &p)) in original.iter().zip(&targets).enumerate() {
                let b = expert.len() + k;
                let a_t = action_index(&o.action, n_act)?;
                let discount = self.gamma.powi((o.horizon - o.t) as i32);
                let qa = q[b * n_act + a_t];
                l_o += discount * bce(qa, p);
                grad[b * n_act + a_t] += w * discount * bce_grad(qa, p);
            }
            l_o /= original.len() as f64;
        }

        let mut grads = Grads::zeros_like(&self.net);
        self.net.backward_tape(&tape, &grad, &mut grads, false)?;
        Ok(LossBreakdown { l_plus, l_o, grads })
    }

    /// One Adam step on `beta_positive * L+ + beta_original * L_o`; returns
    /// `(L+, L_o)` evaluated before the step. The distance model is read only.
    pub fn update_policy(
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
        let b = self.breakdown(expert, original, Some(distance))?;
        self.adam.step(&mut self.net, &b.grads)?;
        Ok((b.l_plus, b.l_o))
    }

    /// Supervised steps pushing `Q(action, s, g)` to 1 and every other
    /// action to 0 on the given `(s, g)` rows.
    pub fn pretrain_toward(&mut self, action: usize, rows: &[(Vec<f64>, Vec<f64>)]) -> Result<f64> {
        if rows.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let n_act = self.n_actions();
        action_index(&crate::env::Action::Discrete(action), n_act)?;
        let tape = self.tape_for(rows.iter().map(|(s, g)| (s.as_slice(), g.as_slice())), rows.len())?;
        let q = tape.output();
        let scale = 1.0 / rows.len() as f64;
        let mut loss = 0.0;
        let mut grad = vec![0.0; q.len()];
        for (k, (&qa, g)) in q.iter().zip(grad.iter_mut()).enumerate() {
            let target = if k % n_act == action { 1.0 } else { 0.0 };
            loss += bce(qa, target);
            *g = scale * bce_grad(qa, target);
        }
        let mut grads = Grads::zeros_like(&self.net);
        self.net.backward_tape(&tape, &grad, &mut grads, false)?;
        self.adam.step(&mut self.net, &grads)?;
        Ok(loss * scale)
    }
}
