use rand::Rng;

use crate::error::{check_dim, Error, Result};
use crate::features::Features;
use crate::nn::{AdamState, DenseNet, Grads, OutputActivation};
use crate::replay::AnchorSet;

pub const EMBEDDING_DIM: usize = 64;
pub const TEMPERATURE: f64 = 0.5;
pub const NEGATIVES_PER_ANCHOR: usize = 32;

/// Temporal-contrastive embedding scored by cosine similarity.
#[derive(Debug, Clone)]
pub struct EmbeddingModel {
    net: DenseNet,
    adam: AdamState,
    pub temperature: f64,
    features: Features,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Cosine similarity; zero vectors score 0.
pub fn cosine(u: &[f64], v: &[f64]) -> f64 {
    let (nu, nv) = (norm(u), norm(v));
    if nu == 0.0 || nv == 0.0 {
        return 0.0;
    }
    u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>() / (nu * nv)
}

/// Accumulates `scale * d cos(u, v) / du` into `out`.
fn cosine_grad_into(out: &mut [f64], u: &[f64], v: &[f64], scale: f64) {
    let (nu, nv) = (norm(u), norm(v));
    if nu == 0.0 || nv == 0.0 {
        return;
    }
    let c = cosine(u, v);
    for ((o, a), b) in out.iter_mut().zip(u).zip(v) {
        *o += scale * (b / (nu * nv) - c * a / (nu * nu));
    }
}

/// `-log( exp(pos/t) / sum_k exp(neg_k/t) )`: the negatives alone form the
/// denominator.
pub fn simclr_tt_loss(pos_sim: f64, neg_sims: &[f64], temperature: f64) -> f64 {
    let max = neg_sims.iter().fold(f64::NEG_INFINITY, |m, &s| m.max(s / temperature));
    let lse = max + neg_sims.iter().map(|&s| (s / temperature - max).exp()).sum::<f64>().ln();
    -pos_sim / temperature + lse
}

/// `(1 + cos) / 2`.
pub fn tt_probability(cos: f64) -> f64 {
    ((1.0 + cos) / 2.0).clamp(0.0, 1.0)
}

impl EmbeddingModel {
    pub fn new<R: Rng + ?Sized>(obs_scale: Vec<f64>, hidden: &[usize], lr: f64, rng: &mut R) -> Self {
        let net = DenseNet::mlp(obs_scale.len(), hidden, EMBEDDING_DIM, OutputActivation::Linear, rng);
        Self::from_net(net, obs_scale, lr).expect("fresh network matches feature width")
    }

    pub fn from_net(net: DenseNet, obs_scale: Vec<f64>, lr: f64) -> Result<Self> {
        check_dim(obs_scale.len(), net.input_dim())?;
        Ok(EmbeddingModel {
            adam: AdamState::for_net(&net, lr),
            net,
            temperature: TEMPERATURE,
            features: Features::new(obs_scale),
        })
    }

    pub fn net(&self) -> &DenseNet {
        &self.net
    }

    pub fn embed(&self, s: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.features.obs_dim(), s.len())?;
        let mut x = Vec::with_capacity(s.len());
        self.features.push_obs(&mut x, s);
        self.net.forward(&x)
    }

    pub fn simclr_tt_similarity(&self, s: &[f64], s_prime: &[f64]) -> Result<f64> {
        Ok(tt_probability(cosine(&self.embed(s)?, &self.embed(s_prime)?)))
    }

    pub fn similarity_batch(&self, pairs: &[(&[f64], &[f64])]) -> Result<Vec<f64>> {
        if pairs.is_empty() {
            return Ok(Vec::new());
        }
        let mut input = Vec::with_capacity(pairs.len() * 2 * self.features.obs_dim());
        for (a, b) in pairs {
            check_dim(self.features.obs_dim(), a.len())?;
            check_dim(self.features.obs_dim(), b.len())?;
            self.features.push_obs(&mut input, a);
            self.features.push_obs(&mut input, b);
        }
        let z = self.net.forward_batch(&input, 2 * pairs.len())?;
        let d = self.net.output_dim();
        Ok(z.chunks_exact(2 * d)
            .map(|c| tt_probability(cosine(&c[..d], &c[d..])))
            .collect())
    }

    /// One Adam step on the temporal-contrastive loss averaged over anchors.
    pub fn train_step(&mut self, sets: &[AnchorSet]) -> Result<f64> {
        if sets.is_empty() {
            return Err(Error::EmptyBatch);
        }
        if sets.iter().any(|s| s.negatives.is_empty()) {
            return Err(Error::Unsampleable("anchor without negatives".into()));
        }
        let mut input = Vec::new();
        let mut offsets = Vec::with_capacity(sets.len());
        let mut rows = 0;
        for set in sets {
            offsets.push(rows);
            self.features.push_obs(&mut input, &set.anchor);
            self.features.push_obs(&mut input, &set.positive);
            for n in &set.negatives {
                self.features.push_obs(&mut input, n);
            }
            rows += 2 + set.negatives.len();
        }
        let tape = self.net.forward_tape(&input, rows)?;
        let z = tape.output();
        let d = self.net.output_dim();
        let row = |r: usize| &z[r * d..(r + 1) * d];
        let mut grad = vec![0.0; rows * d];
        let tau = self.temperature;
        let scale = 1.0 / sets.len() as f64;
        let mut total = 0.0;
        for (set, &base) in sets.iter().zip(&offsets) {
            let anchor = row(base);
            let pos_sim = cosine(anchor, row(base + 1));
            let neg_sims: Vec<f64> = (0..set.negatives.len())
                .map(|k| cosine(anchor, row(base + 2 + k)))
                .collect();
            total += simclr_tt_loss(pos_sim, &neg_sims, tau);

            let max = neg_sims.iter().fold(f64::NEG_INFINITY, |m, &s| m.max(s));
            let weights: Vec<f64> = neg_sims.iter().map(|&s| ((s - max) / tau).exp()).collect();
            let wsum: f64 = weights.iter().sum();

            let mut targets = vec![(1usize, -scale / tau)];
            targets.extend(weights.iter().enumerate().map(|(k, w)| (2 + k, scale * w / wsum / tau)));
            for (offset, coeff) in targets {
                let other = row(base + offset);
                cosine_grad_into(&mut grad[base * d..(base + 1) * d], anchor, other, coeff);
                let r = base + offset;
                cosine_grad_into(&mut grad[r * d..(r + 1) * d], other, anchor, coeff);
            }
        }
        let mut grads = Grads::zeros_like(&self.net);
        self.net.backward_tape(&tape, &grad, &mut grads, false)?;
        self.adam.step(&mut self.net, &grads)?;
        Ok(total * scale)
    }
}
