use rand::Rng;

use crate::error::{check_dim, Error, Result};
use crate::features::Features;
use crate::nn::{AdamState, DenseNet, Grads, OutputActivation};
use crate::replay::ReplayBuffer;

pub const SR_GAMMA: f64 = 0.95;
pub const KERNEL_SIGMA: f64 = 0.05;
pub const NORM_QUANTILE: f64 = 0.95;

/// One TD sample: a transition `(s_t, s_{t+1})` and a probe state `s'`.
#[derive(Debug, Clone, PartialEq)]
pub struct SrSample {
    pub state: Vec<f64>,
    pub next_state: Vec<f64>,
    pub probe: Vec<f64>,
}

/// Discounted future occupancy `M(s, s')` of probe `s'` starting from `s`.
#[derive(Debug, Clone)]
pub struct SuccessorModel {
    net: DenseNet,
    adam: AdamState,
    pub gamma: f64,
    pub sigma: f64,
    features: Features,
}

/// Gaussian proximity kernel standing in for the indicator `1[a = b]`.
pub fn proximity_kernel(a: &[f64], b: &[f64], sigma: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-d2 / (2.0 * sigma * sigma)).exp()
}

/// Linear-interpolation quantile of `values` (`q` in `[0, 1]`).
pub fn quantile(values: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    Ok(sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo]))
}

/// `min(m / m_hat, 1)`; a zero normaliser maps positive `m` to 1 and zero to 0.
pub fn sr_probability(m: f64, m_hat: f64) -> f64 {
    if m_hat <= 0.0 {
        return if m > 0.0 { 1.0 } else { 0.0 };
    }
    (m / m_hat).clamp(0.0, 1.0)
}

/// Transitions from random trajectories; half the probes lie later on the same
/// trajectory, the rest are arbitrary buffer states.
pub fn sample_sr_batch<R: Rng + ?Sized>(buffer: &ReplayBuffer, batch_size: usize, rng: &mut R) -> Result<Vec<SrSample>> {
    if buffer.is_empty() {
        return Err(Error::EmptyBuffer);
    }
    (0..batch_size)
        .map(|k| {
            let traj = buffer.get(rng.random_range(0..buffer.len())).expect("index in range");
            let t = rng.random_range(0..traj.horizon());
            let probe = if k % 2 == 0 {
                traj.observation(rng.random_range(t..=traj.horizon())).to_vec()
            } else {
                let other = buffer.get(rng.random_range(0..buffer.len())).expect("index in range");
                other.observation(rng.random_range(0..=other.horizon())).to_vec()
            };
            Ok(SrSample {
                state: traj.observation(t).to_vec(),
                next_state: traj.observation(t + 1).to_vec(),
                probe,
            })
        })
        .collect()
}

impl SuccessorModel {
    pub fn new<R: Rng + ?Sized>(obs_scale: Vec<f64>, hidden: &[usize], lr: f64, rng: &mut R) -> Self {
        let net = DenseNet::mlp(2 * obs_scale.len(), hidden, 1, OutputActivation::Softplus, rng);
        Self::from_net(net, obs_scale, lr).expect("fresh network matches feature width")
    }

    pub fn from_net(net: DenseNet, obs_scale: Vec<f64>, lr: f64) -> Result<Self> {
        check_dim(2 * obs_scale.len(), net.input_dim())?;
        check_dim(1, net.output_dim())?;
        Ok(SuccessorModel {
            adam: AdamState::for_net(&net, lr),
            net,
            gamma: SR_GAMMA,
            sigma: KERNEL_SIGMA,
            features: Features::new(obs_scale),
        })
    }

    pub fn net(&self) -> &DenseNet {
        &self.net
    }

    fn scaled(&self, s: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(s.len());
        self.features.push_obs(&mut out, s);
        out
    }

    pub fn occupancy(&self, s: &[f64], s_prime: &[f64]) -> Result<f64> {
        check_dim(self.features.obs_dim(), s.len())?;
        check_dim(self.features.obs_dim(), s_prime.len())?;
        Ok(self.net.forward(&self.features.pair(s, s_prime))?[0])
    }

    pub fn occupancy_batch(&self, pairs: &[(&[f64], &[f64])]) -> Result<Vec<f64>> {
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

    /// TD targets `k(s_t, s') + gamma * M(s_{t+1}, s')` under the current net.
    pub fn td_targets(&self, batch: &[SrSample]) -> Result<Vec<f64>> {
        let next: Vec<(&[f64], &[f64])> = batch
            .iter()
            .map(|x| (x.next_state.as_slice(), x.probe.as_slice()))
            .collect();
        let bootstrap = self.occupancy_batch(&next)?;
        Ok(batch
            .iter()
            .zip(bootstrap)
            .map(|(x, m)| {
                proximity_kernel(&self.scaled(&x.state), &self.scaled(&x.probe), self.sigma) + self.gamma * m
            })
            .collect())
    }

    /// Mean squared TD error without updating.
    pub fn td_loss(&self, batch: &[SrSample]) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let targets = self.td_targets(batch)?;
        let cur: Vec<(&[f64], &[f64])> = batch.iter().map(|x| (x.state.as_slice(), x.probe.as_slice())).collect();
        let m = self.occupancy_batch(&cur)?;
        Ok(m.iter().zip(&targets).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / batch.len() as f64)
    }

    /// One Adam step on the squared TD error; the target is held constant.
    pub fn train_step(&mut self, batch: &[SrSample]) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let targets = self.td_targets(batch)?;
        let mut input = Vec::with_capacity(batch.len() * 2 * self.features.obs_dim());
        for x in batch {
            check_dim(self.features.obs_dim(), x.state.len())?;
            self.features.push_pair(&mut input, &x.state, &x.probe);
        }
        let tape = self.net.forward_tape(&input, batch.len())?;
        let n = batch.len() as f64;
        let mut loss = 0.0;
        let grad: Vec<f64> = tape
            .output()
            .iter()
            .zip(&targets)
            .map(|(m, y)| {
                loss += (m - y) * (m - y);
                2.0 * (m - y) / n
            })
            .collect();
        let mut grads = Grads::zeros_like(&self.net);
        self.net.backward_tape(&tape, &grad, &mut grads, false)?;
        self.adam.step(&mut self.net, &grads)?;
        Ok(loss / n)
    }

    /// `min(M(s, s') / M_hat, 1)` with `M_hat` the 0.95-quantile of `M` over
    /// `norm_batch`.
    pub fn sr_similarity(&self, s: &[f64], s_prime: &[f64], norm_batch: &[(&[f64], &[f64])]) -> Result<f64> {
        if norm_batch.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let m_hat = quantile(&self.occupancy_batch(norm_batch)?, NORM_QUANTILE)?;
        Ok(sr_probability(self.occupancy(s, s_prime)?, m_hat))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn one_hot(k: usize) -> Vec<f64> {
        (0..3).map(|i| if i == k { 1.0 } else { 0.0 }).collect()
    }

    /// Cycle 0 -> 1 -> 2 -> 0, every (state, probe) pair.
    fn cycle_batch() -> Vec<SrSample> {
        let mut out = Vec::new();
        for s in 0..3 {
            for p in 0..3 {
                out.push(SrSample {
                    state: one_hot(s),
                    next_state: one_hot((s + 1) % 3),
                    probe: one_hot(p),
                });
            }
        }
        out
    }

    /// Closed form for the cycle: `M(s, p) = gamma^((p - s) mod 3) / (1 - gamma^3)`.
    fn cycle_oracle(s: usize, p: usize, gamma: f64) -> f64 {
        gamma.powi(((p + 3 - s) % 3) as i32) / (1.0 - gamma.powi(3))
    }

    #[test]
    fn quantile_and_probability() {
        assert_eq!(quantile(&[3.0, 1.0, 2.0], 0.5).unwrap(), 2.0);
        assert!((quantile(&[0.0, 10.0], 0.95).unwrap() - 9.5).abs() < 1e-12);
        assert!(quantile(&[], 0.5).is_err());
        assert_eq!(sr_probability(2.0, 1.0), 1.0);
        assert_eq!(sr_probability(0.0, 1.0), 0.0);
        assert_eq!(sr_probability(0.5, 1.0), 0.5);
        assert_eq!(sr_probability(0.3, 0.0), 1.0);
        assert_eq!(sr_probability(0.0, 0.0), 0.0);
    }

    #[test]
    fn zero_discount_target_is_kernel() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut model = SuccessorModel::new(vec![1.0, 1.0], &[8], 1e-3, &mut rng);
        model.gamma = 0.0;
        let batch = vec![SrSample {
            state: vec![0.0, 0.0],
            next_state: vec![0.4, 0.1],
            probe: vec![0.03, 0.04],
        }];
        let target = model.td_targets(&batch).unwrap()[0];
        assert!((target - (-0.0025f64 / 0.005).exp()).abs() < 1e-12);
    }

    #[test]
    fn converges_to_matrix_inverse_on_cycle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut model = SuccessorModel::new(vec![1.0; 3], &[32, 32], 3e-3, &mut rng);
        let batch = cycle_batch();
        for _ in 0..6000 {
            model.train_step(&batch).unwrap();
        }
        for s in 0..3 {
            for p in 0..3 {
                let m = model.occupancy(&one_hot(s), &one_hot(p)).unwrap();
                let want = cycle_oracle(s, p, SR_GAMMA);
                assert!((m - want).abs() / want < 0.05, "M({s},{p}) = {m}, want {want}");
            }
        }
    }

    #[test]
    fn loss_vanishes_at_fixed_point() {
        // hidden unit 3s + q is on (about 20) only for state s with probe q
        let gamma = SR_GAMMA;
        let mut net = DenseNet::zeros(&[6, 9, 1], OutputActivation::Linear);
        let p = net.params_mut();
        let big = 40.0;
        for s in 0..3 {
            for q in 0..3 {
                let h = 3 * s + q;
                p[h * 6 + s] = big;
                p[h * 6 + 3 + q] = big;
                p[54 + h] = -1.5 * big;
            }
        }
        let silu_on = crate::nn::silu(0.5 * big);
        for s in 0..3 {
            for q in 0..3 {
                p[63 + 3 * s + q] = cycle_oracle(s, q, gamma) / silu_on;
            }
        }
        let model = SuccessorModel::from_net(net, vec![1.0; 3], 1e-3).unwrap();
        assert!(model.td_loss(&cycle_batch()).unwrap() < 1e-12);
    }

    #[test]
    fn sampler_and_similarity_ranges() {
        use crate::env::Action;
        use crate::replay::Trajectory;
        let mut buffer = ReplayBuffer::new(8);
        for k in 0..3 {
            let obs = (0..6).map(|t| vec![t as f64 * 0.1, k as f64]).collect();
            buffer
                .append(Trajectory::new(obs, vec![Action::Discrete(0); 6], vec![0.0, 0.0]).unwrap())
                .unwrap();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let batch = sample_sr_batch(&buffer, 64, &mut rng).unwrap();
        let mut model = SuccessorModel::new(vec![1.0, 1.0], &[16], 1e-3, &mut rng);
        for _ in 0..20 {
            assert!(model.train_step(&batch).unwrap().is_finite());
        }
        let norm: Vec<(&[f64], &[f64])> = batch.iter().map(|x| (x.state.as_slice(), x.probe.as_slice())).collect();
        for x in &batch {
            let p = model.sr_similarity(&x.state, &x.probe, &norm).unwrap();
            assert!((0.0..=1.0).contains(&p));
        }
        assert!(sample_sr_batch(&ReplayBuffer::new(2), 4, &mut rng).is_err());
        assert!(model.train_step(&[]).is_err());
    }
}
