//! Learned temporal similarity between states.
//!
//! [`DistanceModel`] is the contrastive `p_phi` used by GCSL-NF. The
//! [`EmbeddingModel`] (SimCLR-TT) and [`SuccessorModel`] are alternatives
//! compared against it; [`DistanceMeasure`] puts all three behind one
//! interface mapping to probabilities in `[0, 1]`.

mod pphi;
mod simclr;
mod successor;

use std::fmt;
use std::str::FromStr;

pub use pphi::{nce_loss, DistanceModel};
pub use simclr::{cosine, simclr_tt_loss, tt_probability, EmbeddingModel, EMBEDDING_DIM, NEGATIVES_PER_ANCHOR, TEMPERATURE};
pub use successor::{
    proximity_kernel, quantile, sample_sr_batch, sr_probability, SrSample, SuccessorModel, KERNEL_SIGMA, NORM_QUANTILE,
    SR_GAMMA,
};

use rand::Rng;

use crate::error::{Error, Result};
use crate::nn::DenseNet;
use crate::replay::{sample_anchor_sets, sample_pair_batch, ReplayBuffer};

/// Default temporal threshold `n`.
pub const DEFAULT_THRESHOLD: usize = 5;

/// Rows per SimCLR-TT anchor set (anchor, positive and negatives); the pair
/// budget of a training step is divided by this to get the anchor count.
const ROWS_PER_ANCHOR: usize = NEGATIVES_PER_ANCHOR + 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistanceKind {
    PPhi,
    SimclrTt,
    Successor,
}

impl DistanceKind {
    pub const ALL: [DistanceKind; 3] = [DistanceKind::PPhi, DistanceKind::SimclrTt, DistanceKind::Successor];

    pub fn name(self) -> &'static str {
        match self {
            DistanceKind::PPhi => "p_phi",
            DistanceKind::SimclrTt => "simclr_tt",
            DistanceKind::Successor => "successor",
        }
    }
}

impl fmt::Display for DistanceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DistanceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DistanceKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown distance kind `{s}`")))
    }
}

#[derive(Debug, Clone)]
pub enum DistanceMeasure {
    PPhi(DistanceModel),
    SimclrTt(EmbeddingModel),
    Successor(SuccessorModel),
}

impl DistanceMeasure {
    pub fn new<R: Rng + ?Sized>(
        kind: DistanceKind,
        obs_scale: Vec<f64>,
        hidden: &[usize],
        lr: f64,
        threshold: usize,
        rng: &mut R,
    ) -> Self {
        match kind {
            DistanceKind::PPhi => DistanceMeasure::PPhi(DistanceModel::new(obs_scale, hidden, lr, threshold, rng)),
            DistanceKind::SimclrTt => DistanceMeasure::SimclrTt(EmbeddingModel::new(obs_scale, hidden, lr, rng)),
            DistanceKind::Successor => DistanceMeasure::Successor(SuccessorModel::new(obs_scale, hidden, lr, rng)),
        }
    }

    /// Rebuilds a measure around a saved network.
    pub fn from_net(kind: DistanceKind, net: DenseNet, obs_scale: Vec<f64>, lr: f64, threshold: usize) -> Result<Self> {
        Ok(match kind {
            DistanceKind::PPhi => DistanceMeasure::PPhi(DistanceModel::from_net(net, obs_scale, lr, threshold)?),
            DistanceKind::SimclrTt => DistanceMeasure::SimclrTt(EmbeddingModel::from_net(net, obs_scale, lr)?),
            DistanceKind::Successor => DistanceMeasure::Successor(SuccessorModel::from_net(net, obs_scale, lr)?),
        })
    }

    pub fn kind(&self) -> DistanceKind {
        match self {
            DistanceMeasure::PPhi(_) => DistanceKind::PPhi,
            DistanceMeasure::SimclrTt(_) => DistanceKind::SimclrTt,
            DistanceMeasure::Successor(_) => DistanceKind::Successor,
        }
    }

    pub fn net(&self) -> &DenseNet {
        match self {
            DistanceMeasure::PPhi(m) => m.net(),
            DistanceMeasure::SimclrTt(m) => m.net(),
            DistanceMeasure::Successor(m) => m.net(),
        }
    }

    /// One training step drawing about `pairs` training pairs from `buffer`.
    /// For `p_phi`, `pairs` is the size of each of the three pair sets.
    pub fn train_step<R: Rng + ?Sized>(
        &mut self,
        buffer: &ReplayBuffer,
        threshold: usize,
        pairs: usize,
        rng: &mut R,
    ) -> Result<f64> {
        match self {
            DistanceMeasure::PPhi(m) => {
                let batch = sample_pair_batch(buffer, threshold, pairs, rng)?;
                m.train_step(&batch)
            }
            DistanceMeasure::SimclrTt(m) => {
                let anchors = (pairs / ROWS_PER_ANCHOR).max(1);
                let sets = sample_anchor_sets(buffer, threshold, anchors, NEGATIVES_PER_ANCHOR, rng)?;
                m.train_step(&sets)
            }
            DistanceMeasure::Successor(m) => {
                let batch = sample_sr_batch(buffer, pairs, rng)?;
                m.train_step(&batch)
            }
        }
    }

    /// Similarity of `reference` to every probe. The successor measure
    /// normalises by the 0.95-quantile over the same probe set.
    pub fn similarity_to(&self, reference: &[f64], probes: &[Vec<f64>]) -> Result<Vec<f64>> {
        let pairs: Vec<(&[f64], &[f64])> = probes.iter().map(|p| (reference, p.as_slice())).collect();
        match self {
            DistanceMeasure::PPhi(m) => m.eval_batch(&pairs),
            DistanceMeasure::SimclrTt(m) => m.similarity_batch(&pairs),
            DistanceMeasure::Successor(m) => {
                if pairs.is_empty() {
                    return Ok(Vec::new());
                }
                let occ = m.occupancy_batch(&pairs)?;
                let m_hat = quantile(&occ, NORM_QUANTILE)?;
                Ok(occ.into_iter().map(|v| sr_probability(v, m_hat)).collect())
            }
        }
    }
}
