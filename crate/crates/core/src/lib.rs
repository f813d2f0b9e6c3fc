//! Goal-conditioned supervised learning with negative feedback (GCSL-NF).
//!
//! The crate bundles everything needed to train and compare goal-reaching
//! agents on small 2D tasks:
//!
//! - [`nn`]: dense networks, backpropagation, Adam and clamped BCE.
//! - [`env`]: point-mass, four-room, LiDAR, pushing and car environments.
//! - [`replay`]: trajectory buffer and the tuple/pair samplers.
//! - [`distance`]: the contrastive temporal-distance model plus SimCLR-TT
//!   and successor-representation alternatives.
//! - [`agent`]: the GCSL-NF learners for discrete and continuous actions.
//! - [`baselines`]: GCSL, weighted GCSL, HER DQN, HER A2C, contrastive GCRL,
//!   continuous GCSL and HER DDPG.
//! - [`harness`]: seeded runs, metrics files, aggregation, ablations, heatmaps.

pub mod agent;
pub mod baselines;
pub mod distance;
pub mod env;
pub mod error;
pub mod harness;
pub mod nn;
pub mod replay;
mod features;

pub use error::{Error, Result};
