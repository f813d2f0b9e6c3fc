//! GCSL-NF learners.
//!
//! Both variants imitate hindsight-relabelled trajectories (`L+`) and add
//! negative feedback under the goal a trajectory was collected for (`L_o`),
//! with the learned distance `p_phi(s_T, g)` as the target probability.

mod continuous;
mod discrete;

pub use continuous::ContinuousPolicyPair;
pub use discrete::{DiscretePolicy, LossBreakdown};

/// Weight of the all-action regulariser in `L+`.
pub const ALPHA: f64 = 0.2;
/// Discount applied to `L_o` as `gamma^(T - t)`.
pub const GAMMA: f64 = 0.99;
/// Default weight of each loss component.
pub const BETA: f64 = 1.0;
/// Gradient steps per collected trajectory.
pub const UPDATES_PER_TRAJECTORY: usize = 16;
/// Expert and original-goal batch size.
pub const BATCH_SIZE: usize = 256;
/// Pretraining steps for the initial-bias task, with their batch size.
pub const BIAS_PRETRAIN_STEPS: usize = 10;
pub const BIAS_PRETRAIN_BATCH: usize = 256;
