//! Comparison learners: supervised imitation (plain and advantage
//! weighted), hindsight-relabelled DQN, A2C and DDPG, and contrastive
//! goal-conditioned RL. All share the network, optimiser and replay code of
//! the main agent.

pub mod cgcrl;
pub mod common;
pub mod gcsl;
pub mod gcsl_continuous;
pub mod her_a2c;
pub mod her_ddpg;
pub mod her_dqn;
pub mod wgcsl;

pub use cgcrl::{cgcrl_loss, geometric_offset, sample_cgcrl_batch, Cgcrl, CgcrlSample};
pub use common::{scaled_distance, SoftmaxPolicy, ValueNet};
pub use gcsl::{gcsl_update, RANDOM_WARMUP};
pub use gcsl_continuous::ContinuousGcsl;
pub use her_a2c::HerA2c;
pub use her_ddpg::HerDdpg;
pub use her_dqn::HerDqn;
pub use wgcsl::Wgcsl;
