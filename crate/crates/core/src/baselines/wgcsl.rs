use rand::Rng;

use crate::distance::quantile;
use crate::error::Result;
use crate::replay::RelabeledTuple;

use super::common::{scaled_distance, SoftmaxPolicy, TdRow, ValueNet, WeightedRow};
use super::gcsl::discrete_action;

pub const GAMMA: f64 = 0.99;
/// Upper end of the clipped exponential advantage weight.
pub const CLIP_M: f64 = 10.0;
/// Fraction of each batch kept by the best-advantage filter.
pub const TOP_FRACTION: f64 = 0.2;
/// A relabelled goal counts as reached when the next state is this close
/// (in scaled observation units).
pub const REACH_TOLERANCE: f64 = 0.05;

/// `exp(A)` clipped to `(0, M]`.
pub fn exp_clip(advantage: f64) -> f64 {
    advantage.exp().min(CLIP_M)
}

/// 1 for advantages in the top `TOP_FRACTION` of the batch, else 0.
pub fn best_advantage_filter(advantages: &[f64]) -> Vec<f64> {
    let Ok(cut) = quantile(advantages, 1.0 - TOP_FRACTION) else {
        return Vec::new();
    };
    advantages.iter().map(|&a| if a >= cut { 1.0 } else { 0.0 }).collect()
}

/// `w_t = gamma^h * exp_clip(A) * filter(A)`.
pub fn wgcsl_weights(advantages: &[f64], horizons: &[usize], gamma: f64) -> Vec<f64> {
    best_advantage_filter(advantages)
        .into_iter()
        .zip(advantages.iter().zip(horizons))
        .map(|(keep, (&a, &h))| gamma.powi(h as i32) * exp_clip(a) * keep)
        .collect()
}

/// Weighted GCSL: advantage-weighted imitation with a TD-trained value.
#[derive(Debug, Clone)]
pub struct Wgcsl {
    pub policy: SoftmaxPolicy,
    pub value: ValueNet,
    pub gamma: f64,
    scale: Vec<f64>,
}

impl Wgcsl {
    pub fn new<R: Rng + ?Sized>(obs_scale: Vec<f64>, n_actions: usize, hidden: &[usize], lr: f64, rng: &mut R) -> Self {
        Wgcsl {
            policy: SoftmaxPolicy::new(obs_scale.clone(), n_actions, hidden, lr, rng),
            value: ValueNet::new(obs_scale.clone(), hidden, lr, rng),
            gamma: GAMMA,
            scale: obs_scale,
        }
    }

    /// Sparse reward for reaching the relabelled goal on this step.
    pub fn reward(&self, next_state: &[f64], goal: &[f64]) -> f64 {
        if scaled_distance(&self.scale, next_state, goal) <= REACH_TOLERANCE {
            1.0
        } else {
            0.0
        }
    }

    /// Value TD step, then the weighted policy step; returns
    /// `(policy_loss, value_loss)`.
    pub fn wgcsl_update(&mut self, expert: &[RelabeledTuple]) -> Result<(f64, f64)> {
        let td: Vec<TdRow> = expert
            .iter()
            .map(|e| (e.state.as_slice(), e.next_state.as_slice(), e.goal.as_slice(), self.reward(&e.next_state, &e.goal)))
            .collect();
        let (value_loss, adv) = self.value.td_step(&td, self.gamma)?;
        let horizons: Vec<usize> = expert.iter().map(|e| e.offset).collect();
        let weights = wgcsl_weights(&adv, &horizons, self.gamma);
        let rows = expert
            .iter()
            .zip(&weights)
            .map(|(e, &w)| Ok((e.state.as_slice(), e.goal.as_slice(), discrete_action(&e.action)?, w)))
            .collect::<Result<Vec<WeightedRow>>>()?;
        let policy_loss = self.policy.weighted_nll_step(&rows)?;
        Ok((policy_loss, value_loss))
    }
}
