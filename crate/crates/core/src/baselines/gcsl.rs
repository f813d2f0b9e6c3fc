use crate::error::{Error, Result};
use crate::replay::RelabeledTuple;

use super::common::{SoftmaxPolicy, WeightedRow};

/// Trajectories collected with uniform random actions before the greedy
/// policy takes over (skipped on the initial-bias task).
pub const RANDOM_WARMUP: usize = 200;

pub(crate) fn discrete_action(t: &crate::env::Action) -> Result<usize> {
    t.index().ok_or_else(|| Error::InvalidAction {
        env: "discrete learner",
        detail: format!("{t:?}"),
    })
}

/// One Adam step on `mean -log pi(a_t | s_t, g')`.
pub fn gcsl_update(policy: &mut SoftmaxPolicy, expert: &[RelabeledTuple]) -> Result<f64> {
    let rows = expert
        .iter()
        .map(|e| Ok((e.state.as_slice(), e.goal.as_slice(), discrete_action(&e.action)?, 1.0)))
        .collect::<Result<Vec<WeightedRow>>>()?;
    policy.weighted_nll_step(&rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use crate::env::Action;
    use crate::nn::{DenseNet, OutputActivation};

    fn tuple(a: usize) -> RelabeledTuple {
        RelabeledTuple {
            state: vec![0.1, 0.2],
            action: Action::Discrete(a),
            next_state: vec![0.15, 0.2],
            goal: vec![0.5, 0.5],
            t: 0,
            offset: 4,
            horizon: 10,
            trajectory_id: 0,
        }
    }

    #[test]
    fn uniform_policy_loss() {
        let mut p = SoftmaxPolicy::from_net(DenseNet::zeros(&[4, 3, 5], OutputActivation::Linear), vec![1.0; 2], 1e-3)
            .unwrap();
        assert!((gcsl_update(&mut p, &[tuple(1), tuple(3)]).unwrap() - 5f64.ln()).abs() < 1e-12);
        assert!(gcsl_update(&mut p, &[]).is_err());
    }

    #[test]
    fn certain_policy_has_zero_loss() {
        let mut net = DenseNet::zeros(&[4, 3, 5], OutputActivation::Linear);
        let n = net.param_count();
        net.params_mut()[n - 5 + 2] = 800.0;
        let mut p = SoftmaxPolicy::from_net(net, vec![1.0; 2], 1e-3).unwrap();
        assert_eq!(gcsl_update(&mut p, &[tuple(2)]).unwrap(), 0.0);
    }

    #[test]
    fn imitation_raises_likelihood() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut p = SoftmaxPolicy::new(vec![1.0; 2], 5, &[16], 1e-3, &mut rng);
        let batch = [tuple(3)];
        let before = p.probs(&batch[0].state, &batch[0].goal).unwrap()[3];
        for _ in 0..50 {
            gcsl_update(&mut p, &batch).unwrap();
        }
        assert!(p.probs(&batch[0].state, &batch[0].goal).unwrap()[3] > before);
        assert_eq!(RANDOM_WARMUP, 200);
    }
}
