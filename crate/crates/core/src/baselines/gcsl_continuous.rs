use rand::Rng;

use crate::error::{check_dim, Error, Result};
use crate::features::Features;
use crate::nn::{AdamState, DenseNet, Grads, OutputActivation};
use crate::replay::RelabeledTuple;

/// Deterministic policy `pi(s, g) in [0, 1]^d` regressed onto the relabelled
/// actions.
#[derive(Debug, Clone)]
pub struct ContinuousGcsl {
    actor: DenseNet,
    adam: AdamState,
    features: Features,
}

impl ContinuousGcsl {
    pub fn new<R: Rng + ?Sized>(obs_scale: Vec<f64>, action_dim: usize, hidden: &[usize], lr: f64, rng: &mut R) -> Self {
        let actor = DenseNet::mlp(2 * obs_scale.len(), hidden, action_dim, OutputActivation::Logistic, rng);
        ContinuousGcsl {
            adam: AdamState::for_net(&actor, lr),
            actor,
            features: Features::new(obs_scale),
        }
    }

    pub fn actor(&self) -> &DenseNet {
        &self.actor
    }

    pub fn act(&self, s: &[f64], g: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.features.obs_dim(), s.len())?;
        check_dim(self.features.obs_dim(), g.len())?;
        self.actor.forward(&self.features.pair(s, g))
    }

    /// `mean_{b, j} (pi_j(s_t, g') - a_{t, j})^2` and its gradient.
    pub fn mse(&self, expert: &[RelabeledTuple]) -> Result<(f64, Grads)> {
        if expert.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let d = self.actor.output_dim();
        let mut x = Vec::with_capacity(expert.len() * 2 * self.features.obs_dim());
        let mut target = Vec::with_capacity(expert.len() * d);
        for e in expert {
            check_dim(self.features.obs_dim(), e.state.len())?;
            check_dim(self.features.obs_dim(), e.goal.len())?;
            let a = e.action.values().ok_or_else(|| Error::InvalidAction {
                env: "continuous learner",
                detail: format!("{:?}", e.action),
            })?;
            check_dim(d, a.len())?;
            self.features.push_pair(&mut x, &e.state, &e.goal);
            target.extend_from_slice(a);
        }
        let tape = self.actor.forward_tape(&x, expert.len())?;
        let count = target.len() as f64;
        let diff: Vec<f64> = tape.output().iter().zip(&target).map(|(p, a)| p - a).collect();
        let loss = diff.iter().map(|e| e * e).sum::<f64>() / count;
        let grad: Vec<f64> = diff.iter().map(|e| 2.0 * e / count).collect();
        let mut grads = Grads::zeros_like(&self.actor);
        self.actor.backward_tape(&tape, &grad, &mut grads, false)?;
        Ok((loss, grads))
    }

    pub fn gcsl_update(&mut self, expert: &[RelabeledTuple]) -> Result<f64> {
        let (loss, grads) = self.mse(expert)?;
        self.adam.step(&mut self.actor, &grads)?;
        Ok(loss)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use crate::env::Action;

    fn tuple(a: Vec<f64>, s: f64) -> RelabeledTuple {
        RelabeledTuple {
            state: vec![s, 0.0],
            action: Action::Continuous(a),
            next_state: vec![s, 0.0],
            goal: vec![0.3, 0.3],
            t: 0,
            offset: 1,
            horizon: 5,
            trajectory_id: 0,
        }
    }

    #[test]
    fn zero_net_outputs_half() {
        let p = ContinuousGcsl {
            actor: DenseNet::zeros(&[4, 3, 2], OutputActivation::Logistic),
            adam: AdamState::new(4 * 3 + 3 + 3 * 2 + 2, 1e-3),
            features: Features::new(vec![1.0; 2]),
        };
        let (loss, _) = p.mse(&[tuple(vec![0.5, 1.0], 0.0)]).unwrap();
        assert!((loss - 0.125).abs() < 1e-12);
        assert!(p.mse(&[tuple(vec![0.5], 0.0)]).is_err());
        assert!(p.mse(&[]).is_err());
    }

    #[test]
    fn gradient_matches_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = ContinuousGcsl::new(vec![1.0; 2], 3, &[6], 1e-3, &mut rng);
        let batch = [tuple(vec![0.1, 0.9, 0.4], 0.2), tuple(vec![0.7, 0.2, 0.5], -0.3)];
        let (_, g) = p.mse(&batch).unwrap();
        let h = 1e-6;
        for i in 0..p.actor.param_count() {
            let nudge = |delta: f64| {
                let mut c = p.clone();
                c.actor.params_mut()[i] += delta;
                c.mse(&batch).unwrap().0
            };
            let fd = (nudge(h) - nudge(-h)) / (2.0 * h);
            assert!((fd - g.0[i]).abs() < 1e-6, "{i}: {fd} vs {}", g.0[i]);
        }
    }

    #[test]
    fn regression_converges() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut p = ContinuousGcsl::new(vec![1.0; 2], 2, &[16], 1e-2, &mut rng);
        let batch = [tuple(vec![0.2, 0.8], 0.1)];
        for _ in 0..500 {
            p.gcsl_update(&batch).unwrap();
        }
        let a = p.act(&[0.1, 0.0], &[0.3, 0.3]).unwrap();
        assert!((a[0] - 0.2).abs() < 0.02 && (a[1] - 0.8).abs() < 0.02, "{a:?}");
    }
}
