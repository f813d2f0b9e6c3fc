use rand::Rng;

use crate::error::{check_dim, Error, Result};
use crate::features::Features;
use crate::nn::{bce, bce_grad, AdamState, DenseNet, Grads, OutputActivation};
use crate::replay::{PairBatch, StatePair};

/// Learned probability that two states lie within `threshold` steps of each
/// other on a trajectory.
#[derive(Debug, Clone)]
pub struct DistanceModel {
    net: DenseNet,
    adam: AdamState,
    pub threshold: usize,
    features: Features,
}

/// `-[mean log p(D+) + mean log(1 - p(D-1)) + mean log(1 - p(D-2))]`;
/// an empty set contributes nothing.
pub fn nce_loss(positives: &[f64], same_negatives: &[f64], cross_negatives: &[f64]) -> f64 {
    let mean = |ps: &[f64], target: f64| {
        if ps.is_empty() {
            0.0
        } else {
            ps.iter().map(|&p| bce(p, target)).sum::<f64>() / ps.len() as f64
        }
    };
    mean(positives, 1.0) + mean(same_negatives, 0.0) + mean(cross_negatives, 0.0)
}

impl DistanceModel {
    pub fn new<R: Rng + ?Sized>(
        obs_scale: Vec<f64>,
        hidden: &[usize],
        lr: f64,
        threshold: usize,
        rng: &mut R,
    ) -> Self {
        let input = 2 * obs_scale.len();
        let net = DenseNet::mlp(input, hidden, 1, OutputActivation::Logistic, rng);
        Self::from_net(net, obs_scale, lr, threshold)
            .expect("freshly built network matches its own feature width")
    }

    pub fn from_net(net: DenseNet, obs_scale: Vec<f64>, lr: f64, threshold: usize) -> Result<Self> {
        check_dim(2 * obs_scale.len(), net.input_dim())?;
        check_dim(1, net.output_dim())?;
        Ok(DistanceModel {
            adam: AdamState::for_net(&net, lr),
            net,
            threshold,
            features: Features::new(obs_scale),
        })
    }

    pub fn net(&self) -> &DenseNet {
        &self.net
    }

    pub fn p_phi_eval(&self, s: &[f64], s_prime: &[f64]) -> Result<f64> {
        check_dim(self.features.obs_dim(), s.len())?;
        check_dim(self.features.obs_dim(), s_prime.len())?;
        Ok(self.net.forward(&self.features.pair(s, s_prime))?[0])
    }

    pub fn eval_batch(&self, pairs: &[(&[f64], &[f64])]) -> Result<Vec<f64>> {
        if pairs.is_empty() {
            return Ok(Vec::new());
        }
        let mut input = Vec::with_capacity(pairs.len() * 2 * self.features.obs_dim());
        for (a, b) in pairs {
            check_dim(self.features.obs_dim(), a.len())?;
            check_dim(self.features.obs_dim(), b.len())?;
            self.features.push_pair(&mut input, a, b);
        }
        self.net.forward_batch(&input, pairs.len())
    }

    /// One Adam step on the NCE loss; returns the loss before the step.
    pub fn train_step(&mut self, batch: &PairBatch) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let sets: [(&[StatePair], f64); 3] = [
            (&batch.positives, 1.0),
            (&batch.same_trajectory_negatives, 0.0),
            (&batch.cross_trajectory_negatives, 0.0),
        ];
        let rows = batch.len();
        let mut input = Vec::with_capacity(rows * 2 * self.features.obs_dim());
        for (pairs, _) in &sets {
            for p in pairs.iter() {
                self.features.push_pair(&mut input, &p.first, &p.second);
            }
        }
        let tape = self.net.forward_tape(&input, rows)?;
        let out = tape.output();
        let mut grad = Vec::with_capacity(rows);
        let mut probs: [Vec<f64>; 3] = Default::default();
        let mut row = 0;
        for (k, (pairs, target)) in sets.iter().enumerate() {
            let count = pairs.len();
            for _ in 0..count {
                probs[k].push(out[row]);
                grad.push(bce_grad(out[row], *target) / count as f64);
                row += 1;
            }
        }
        let loss = nce_loss(&probs[0], &probs[1], &probs[2]);
        let mut grads = Grads::zeros_like(&self.net);
        self.net.backward_tape(&tape, &grad, &mut grads, false)?;
        self.adam.step(&mut self.net, &grads)?;
        Ok(loss)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use crate::replay::StepRef;

    #[test]
    fn loss_arithmetic() {
        let loss = nce_loss(&[0.9], &[0.1], &[]);
        assert!((loss + 2.0 * 0.9f64.ln()).abs() < 1e-12);
        assert!((loss - 0.2107).abs() < 1e-4);
        assert!(nce_loss(&[1.0 - 1e-12], &[1e-12], &[1e-12]) < 1e-6);
    }

    #[test]
    fn zero_net_gives_half() {
        let net = DenseNet::zeros(&[4, 8, 1], OutputActivation::Logistic);
        let model = DistanceModel::from_net(net, vec![1.0, 1.0], 1e-3, 5).unwrap();
        assert_eq!(model.p_phi_eval(&[0.1, 0.2], &[0.9, -0.3]).unwrap(), 0.5);
        assert!(model.p_phi_eval(&[0.1], &[0.9, -0.3]).is_err());
    }

    fn sp(a: f64, b: f64) -> StatePair {
        let r = StepRef { trajectory_id: 0, t: 0 };
        StatePair {
            first: vec![a, 0.0],
            second: vec![b, 0.0],
            first_ref: r,
            second_ref: r,
        }
    }

    #[test]
    fn fixed_batch_loss_decreases() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut model = DistanceModel::new(vec![1.0, 1.0], &[32, 32], 1e-3, 5, &mut rng);
        let batch = PairBatch {
            positives: (0..16).map(|k| sp(k as f64 / 16.0, k as f64 / 16.0 + 0.05)).collect(),
            same_trajectory_negatives: (0..16).map(|k| sp(k as f64 / 16.0, -0.8)).collect(),
            cross_trajectory_negatives: (0..16).map(|k| sp(-(k as f64) / 16.0, 0.9)).collect(),
        };
        let first = model.train_step(&batch).unwrap();
        let mut last = first;
        for _ in 0..199 {
            last = model.train_step(&batch).unwrap();
        }
        assert!(last < first, "{last} !< {first}");
        assert!(model.train_step(&PairBatch::default()).is_err());
    }
}
