use rand::Rng;

use crate::error::{check_dim, Error, Result};
use crate::features::{argmax, Features};
use crate::nn::{AdamState, DenseNet, Grads, OutputActivation};

/// Euclidean distance between two observations after per-component scaling.
pub fn scaled_distance(scale: &[f64], a: &[f64], b: &[f64]) -> f64 {
    scale
        .iter()
        .zip(a.iter().zip(b))
        .map(|(s, (x, y))| (s * (x - y)).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// `min(1, pi / mu)`; 1 when `mu` is not positive.
pub fn truncated_ratio(pi: f64, mu: f64) -> f64 {
    if mu <= 0.0 {
        1.0
    } else {
        (pi / mu).min(1.0)
    }
}

pub(crate) fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().fold(f64::NEG_INFINITY, |m, &z| m.max(z));
    let e: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = e.iter().sum();
    e.into_iter().map(|v| v / sum).collect()
}

/// Categorical policy `pi(a | s, g)` over unnormalised logits.
#[derive(Debug, Clone)]
pub struct SoftmaxPolicy {
    net: DenseNet,
    adam: AdamState,
    features: Features,
}

/// One weighted log-likelihood row: `(s, g, a, w)`.
pub type WeightedRow<'a> = (&'a [f64], &'a [f64], usize, f64);

impl SoftmaxPolicy {
    pub fn new<R: Rng + ?Sized>(obs_scale: Vec<f64>, n_actions: usize, hidden: &[usize], lr: f64, rng: &mut R) -> Self {
        let net = DenseNet::mlp(2 * obs_scale.len(), hidden, n_actions, OutputActivation::Linear, rng);
        Self::from_net(net, obs_scale, lr).expect("fresh network matches feature width")
    }

    pub fn from_net(net: DenseNet, obs_scale: Vec<f64>, lr: f64) -> Result<Self> {
        check_dim(2 * obs_scale.len(), net.input_dim())?;
        Ok(SoftmaxPolicy {
            adam: AdamState::for_net(&net, lr),
            net,
            features: Features::new(obs_scale),
        })
    }

    pub fn net(&self) -> &DenseNet {
        &self.net
    }

    pub fn n_actions(&self) -> usize {
        self.net.output_dim()
    }

    pub fn probs(&self, s: &[f64], g: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.features.obs_dim(), s.len())?;
        check_dim(self.features.obs_dim(), g.len())?;
        Ok(softmax(&self.net.forward(&self.features.pair(s, g))?))
    }

    /// `argmax_a pi(a | s, g)`, ties to the lowest index.
    pub fn act_greedy(&self, s: &[f64], g: &[f64]) -> Result<usize> {
        Ok(argmax(&self.probs(s, g)?))
    }

    pub fn act_sample<R: Rng + ?Sized>(&self, s: &[f64], g: &[f64], rng: &mut R) -> Result<usize> {
        let p = self.probs(s, g)?;
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (a, q) in p.iter().enumerate() {
            acc += q;
            if u < acc {
                return Ok(a);
            }
        }
        Ok(p.len() - 1)
    }

    /// `mean -w * log pi(a | s, g)` and its gradient.
    pub fn weighted_nll(&self, rows: &[WeightedRow]) -> Result<(f64, Grads)> {
        self.weighted_nll_entropy(rows, 0.0, None)
    }

    /// `mean [-rho * w * log pi(a | s, g) - c * H(pi(. | s, g))]` and its
    /// gradient. With `behaviour` probabilities `mu` the constant factor is
    /// `rho = min(1, pi(a) / mu)`, otherwise 1.
    pub fn weighted_nll_entropy(
        &self,
        rows: &[WeightedRow],
        entropy_coef: f64,
        behaviour: Option<&[f64]>,
    ) -> Result<(f64, Grads)> {
        if rows.is_empty() {
            return Err(Error::EmptyBatch);
        }
        if let Some(mu) = behaviour {
            check_dim(rows.len(), mu.len())?;
        }
        let n_act = self.n_actions();
        let mut input = Vec::with_capacity(rows.len() * 2 * self.features.obs_dim());
        for (s, g, a, _) in rows {
            check_dim(self.features.obs_dim(), s.len())?;
            check_dim(self.features.obs_dim(), g.len())?;
            if *a >= n_act {
                return Err(Error::InvalidAction {
                    env: "softmax policy",
                    detail: format!("action {a}"),
                });
            }
            self.features.push_pair(&mut input, s, g);
        }
        let tape = self.net.forward_tape(&input, rows.len())?;
        let n = rows.len() as f64;
        let mut loss = 0.0;
        let mut grad = Vec::with_capacity(rows.len() * n_act);
        for (k, (_, _, a, w)) in rows.iter().enumerate() {
            let p = softmax(tape.row(k));
            let w = match behaviour {
                Some(mu) => w * truncated_ratio(p[*a], mu[k]),
                None => *w,
            };
            loss -= w * p[*a].max(f64::MIN_POSITIVE).ln();
            // dH/dz_j = -p_j (ln p_j + H)
            let logp: Vec<f64> = p.iter().map(|pj| if *pj > 0.0 { pj.ln() } else { 0.0 }).collect();
            let h: f64 = -p.iter().zip(&logp).map(|(pj, l)| pj * l).sum::<f64>();
            loss -= entropy_coef * h;
            grad.extend(p.iter().zip(&logp).enumerate().map(|(j, (pj, l))| {
                let onehot = if j == *a { 1.0 } else { 0.0 };
                (w * (pj - onehot) + entropy_coef * pj * (l + h)) / n
            }));
        }
        let mut grads = Grads::zeros_like(&self.net);
        self.net.backward_tape(&tape, &grad, &mut grads, false)?;
        Ok((loss / n, grads))
    }

    pub fn weighted_nll_step(&mut self, rows: &[WeightedRow]) -> Result<f64> {
        self.weighted_nll_entropy_step(rows, 0.0, None)
    }

    pub fn weighted_nll_entropy_step(
        &mut self,
        rows: &[WeightedRow],
        entropy_coef: f64,
        behaviour: Option<&[f64]>,
    ) -> Result<f64> {
        let (loss, grads) = self.weighted_nll_entropy(rows, entropy_coef, behaviour)?;
        self.adam.step(&mut self.net, &grads)?;
        Ok(loss)
    }
}

/// State-goal value `V(s, g)` fitted by one-step TD.
#[derive(Debug, Clone)]
pub struct ValueNet {
    net: DenseNet,
    adam: AdamState,
    features: Features,
}

/// `(s_t, s_{t+1}, g, r_t)`.
pub type TdRow<'a> = (&'a [f64], &'a [f64], &'a [f64], f64);

impl ValueNet {
    pub fn new<R: Rng + ?Sized>(obs_scale: Vec<f64>, hidden: &[usize], lr: f64, rng: &mut R) -> Self {
        let net = DenseNet::mlp(2 * obs_scale.len(), hidden, 1, OutputActivation::Linear, rng);
        ValueNet {
            adam: AdamState::for_net(&net, lr),
            net,
            features: Features::new(obs_scale),
        }
    }

    pub fn net(&self) -> &DenseNet {
        &self.net
    }

    pub fn value(&self, s: &[f64], g: &[f64]) -> Result<f64> {
        check_dim(self.features.obs_dim(), s.len())?;
        check_dim(self.features.obs_dim(), g.len())?;
        Ok(self.net.forward(&self.features.pair(s, g))?[0])
    }

    /// TD loss, advantages `r + gamma V(s', g) - V(s, g)` and the gradient
    /// with the bootstrap target held constant.
    pub fn td(&self, rows: &[TdRow], gamma: f64) -> Result<(f64, Vec<f64>, Grads)> {
        if rows.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let mut cur = Vec::with_capacity(rows.len() * 2 * self.features.obs_dim());
        let mut next = Vec::with_capacity(cur.capacity());
        for (s, s_next, g, _) in rows {
            check_dim(self.features.obs_dim(), s.len())?;
            check_dim(self.features.obs_dim(), s_next.len())?;
            check_dim(self.features.obs_dim(), g.len())?;
            self.features.push_pair(&mut cur, s, g);
            self.features.push_pair(&mut next, s_next, g);
        }
        let v_next = self.net.forward_batch(&next, rows.len())?;
        let tape = self.net.forward_tape(&cur, rows.len())?;
        let n = rows.len() as f64;
        let advantages: Vec<f64> = rows
            .iter()
            .zip(v_next.iter().zip(tape.output()))
            .map(|((_, _, _, r), (vn, v))| r + gamma * vn - v)
            .collect();
        let loss = advantages.iter().map(|a| a * a).sum::<f64>() / n;
        let grad: Vec<f64> = advantages.iter().map(|a| -2.0 * a / n).collect();
        let mut grads = Grads::zeros_like(&self.net);
        self.net.backward_tape(&tape, &grad, &mut grads, false)?;
        Ok((loss, advantages, grads))
    }

    /// One Adam step on the TD loss; returns the loss and the advantages,
    /// both evaluated before the step.
    pub fn td_step(&mut self, rows: &[TdRow], gamma: f64) -> Result<(f64, Vec<f64>)> {
        let (loss, adv, grads) = self.td(rows, gamma)?;
        self.adam.step(&mut self.net, &grads)?;
        Ok((loss, adv))
    }
}
