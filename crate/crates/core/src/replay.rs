//! Trajectory storage and the samplers built on it.
//!
//! Every sampled record copies its state vectors, so tuples stay valid after
//! the buffer evicts their source trajectory.

use std::collections::VecDeque;

use rand::Rng;
use rand_distr::{Distribution, Triangular};

use crate::env::Action;
use crate::error::{Error, Result};

pub const DEFAULT_CAPACITY: usize = 2000;

/// `s_0 .. s_T` with one action per observation and the goal it was collected under.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    observations: Vec<Vec<f64>>,
    actions: Vec<Action>,
    goal: Vec<f64>,
}

impl Trajectory {
    pub fn new(observations: Vec<Vec<f64>>, actions: Vec<Action>, goal: Vec<f64>) -> Result<Self> {
        if observations.len() < 2 {
            return Err(Error::InconsistentTrajectory(format!(
                "need at least 2 observations, got {}",
                observations.len()
            )));
        }
        if actions.len() != observations.len() {
            return Err(Error::InconsistentTrajectory(format!(
                "{} observations but {} actions",
                observations.len(),
                actions.len()
            )));
        }
        let dim = observations[0].len();
        if let Some(bad) = observations.iter().position(|o| o.len() != dim) {
            return Err(Error::InconsistentTrajectory(format!(
                "observation {bad} has width {} instead of {dim}",
                observations[bad].len()
            )));
        }
        if goal.len() != dim {
            return Err(Error::InconsistentTrajectory(format!(
                "goal width {} differs from observation width {dim}",
                goal.len()
            )));
        }
        let kinds_match = actions
            .iter()
            .all(|a| matches!(a, Action::Discrete(_)) == matches!(actions[0], Action::Discrete(_)));
        if !kinds_match {
            return Err(Error::InconsistentTrajectory("mixed action kinds".into()));
        }
        Ok(Trajectory {
            observations,
            actions,
            goal,
        })
    }

    /// `T`: number of transitions.
    pub fn horizon(&self) -> usize {
        self.observations.len() - 1
    }

    pub fn obs_dim(&self) -> usize {
        self.observations[0].len()
    }

    pub fn observations(&self) -> &[Vec<f64>] {
        &self.observations
    }

    pub fn observation(&self, t: usize) -> &[f64] {
        &self.observations[t]
    }

    pub fn actions(&self) -> &[Action] {
        &self.actions
    }

    pub fn goal(&self) -> &[f64] {
        &self.goal
    }

    pub fn final_observation(&self) -> &[f64] {
        self.observations.last().unwrap()
    }
}

/// Bounded FIFO of trajectories; each stored trajectory gets a fresh id.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: VecDeque<(u64, Trajectory)>,
    next_id: u64,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        ReplayBuffer {
            capacity,
            items: VecDeque::with_capacity(capacity.min(4096)),
            next_id: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Stores `trajectory`, evicting the oldest entry when full. Returns its id.
    pub fn append(&mut self, trajectory: Trajectory) -> Result<u64> {
        if let Some((_, first)) = self.items.front() {
            if first.obs_dim() != trajectory.obs_dim() {
                return Err(Error::InconsistentTrajectory(format!(
                    "buffer holds width {} observations, got {}",
                    first.obs_dim(),
                    trajectory.obs_dim()
                )));
            }
        }
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        let id = self.next_id;
        self.next_id += 1;
        self.items.push_back((id, trajectory));
        Ok(id)
    }

    pub fn get(&self, index: usize) -> Option<&Trajectory> {
        self.items.get(index).map(|(_, t)| t)
    }

    pub fn id(&self, index: usize) -> Option<u64> {
        self.items.get(index).map(|(id, _)| *id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, &Trajectory)> {
        self.items.iter().map(|(id, t)| (*id, t))
    }

    fn pick<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(u64, &Trajectory)> {
        if self.items.is_empty() {
            return Err(Error::EmptyBuffer);
        }
        let (id, t) = &self.items[rng.random_range(0..self.items.len())];
        Ok((*id, t))
    }
}

/// `(s_t, a_t, g' = s_{t+i})` with `t >= 0`, `i > 0`, `t + i <= T`.
#[derive(Debug, Clone, PartialEq)]
pub struct RelabeledTuple {
    pub state: Vec<f64>,
    pub action: Action,
    pub next_state: Vec<f64>,
    pub goal: Vec<f64>,
    pub t: usize,
    pub offset: usize,
    pub horizon: usize,
    pub trajectory_id: u64,
}

/// `(s_t, a_t, s_T, g)` with `0 < t <= T` and `g` the original goal.
#[derive(Debug, Clone, PartialEq)]
pub struct OriginalTuple {
    pub state: Vec<f64>,
    pub action: Action,
    pub final_state: Vec<f64>,
    pub goal: Vec<f64>,
    pub t: usize,
    pub horizon: usize,
    pub trajectory_id: u64,
}

/// Which goal a [`Transition`] is labelled with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GoalSource {
    Original,
    Relabeled,
}

/// `(s_t, a_t, s_{t+1}, g)` for value-based learners.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: Action,
    pub next_state: Vec<f64>,
    pub goal: Vec<f64>,
    pub source: GoalSource,
    pub t: usize,
    pub trajectory_id: u64,
}

/// Uniform over `{(t, t + i) : t >= 0, i > 0, t + i <= horizon}`.
fn uniform_ordered_pair<R: Rng + ?Sized>(horizon: usize, rng: &mut R) -> (usize, usize) {
    loop {
        let a = rng.random_range(0..=horizon);
        let b = rng.random_range(0..=horizon);
        if a != b {
            return (a.min(b), a.max(b));
        }
    }
}

pub fn sample_expert_tuples<R: Rng + ?Sized>(
    buffer: &ReplayBuffer,
    batch_size: usize,
    rng: &mut R,
) -> Result<Vec<RelabeledTuple>> {
    (0..batch_size)
        .map(|_| {
            let (id, traj) = buffer.pick(rng)?;
            let (t, g) = uniform_ordered_pair(traj.horizon(), rng);
            Ok(RelabeledTuple {
                state: traj.observation(t).to_vec(),
                action: traj.actions[t].clone(),
                next_state: traj.observation(t + 1).to_vec(),
                goal: traj.observation(g).to_vec(),
                t,
                offset: g - t,
                horizon: traj.horizon(),
                trajectory_id: id,
            })
        })
        .collect()
}

pub fn sample_original_tuples<R: Rng + ?Sized>(
    buffer: &ReplayBuffer,
    batch_size: usize,
    rng: &mut R,
) -> Result<Vec<OriginalTuple>> {
    (0..batch_size)
        .map(|_| {
            let (id, traj) = buffer.pick(rng)?;
            let t = rng.random_range(1..=traj.horizon());
            Ok(OriginalTuple {
                state: traj.observation(t).to_vec(),
                action: traj.actions[t].clone(),
                final_state: traj.final_observation().to_vec(),
                goal: traj.goal.clone(),
                t,
                horizon: traj.horizon(),
                trajectory_id: id,
            })
        })
        .collect()
}

/// Half original-goal and half relabelled-goal transitions.
pub fn sample_transitions<R: Rng + ?Sized>(
    buffer: &ReplayBuffer,
    batch_size: usize,
    rng: &mut R,
) -> Result<Vec<Transition>> {
    (0..batch_size)
        .map(|k| {
            let (id, traj) = buffer.pick(rng)?;
            let (t, goal, source) = if k % 2 == 0 {
                let t = rng.random_range(0..traj.horizon());
                (t, traj.goal.clone(), GoalSource::Original)
            } else {
                let (t, g) = uniform_ordered_pair(traj.horizon(), rng);
                (t, traj.observation(g).to_vec(), GoalSource::Relabeled)
            };
            Ok(Transition {
                state: traj.observation(t).to_vec(),
                action: traj.actions[t].clone(),
                next_state: traj.observation(t + 1).to_vec(),
                goal,
                source,
                t,
                trajectory_id: id,
            })
        })
        .collect()
}

/// `round(j')` with `j'` from the symmetric triangular density on
/// `[i - n, i + n]` (mode `i`); draws landing outside `[0, horizon]` are redrawn.
pub fn triangular_sample<R: Rng + ?Sized>(i: usize, n: usize, horizon: usize, rng: &mut R) -> usize {
    assert!(i <= horizon && n >= 1);
    let centre = i as f64;
    let tri = Triangular::new(centre - n as f64, centre + n as f64, centre).expect("n >= 1");
    loop {
        let j = tri.sample(rng).round();
        if j >= 0.0 && j <= horizon as f64 {
            return j as usize;
        }
    }
}

/// One side of a [`StatePair`]: trajectory id and time step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepRef {
    pub trajectory_id: u64,
    pub t: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatePair {
    pub first: Vec<f64>,
    pub second: Vec<f64>,
    pub first_ref: StepRef,
    pub second_ref: StepRef,
}

/// Positives (`D+`), far same-trajectory negatives (`D-1`) and
/// cross-trajectory negatives (`D-2`).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PairBatch {
    pub positives: Vec<StatePair>,
    pub same_trajectory_negatives: Vec<StatePair>,
    pub cross_trajectory_negatives: Vec<StatePair>,
}

impl PairBatch {
    pub fn len(&self) -> usize {
        self.positives.len() + self.same_trajectory_negatives.len() + self.cross_trajectory_negatives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn pair(id_a: u64, ta: &Trajectory, i: usize, id_b: u64, tb: &Trajectory, j: usize) -> StatePair {
    StatePair {
        first: ta.observation(i).to_vec(),
        second: tb.observation(j).to_vec(),
        first_ref: StepRef {
            trajectory_id: id_a,
            t: i,
        },
        second_ref: StepRef {
            trajectory_id: id_b,
            t: j,
        },
    }
}

pub fn sample_positive_pair<R: Rng + ?Sized>(buffer: &ReplayBuffer, n: usize, rng: &mut R) -> Result<StatePair> {
    let (id, traj) = buffer.pick(rng)?;
    let i = rng.random_range(0..=traj.horizon());
    let j = triangular_sample(i, n, traj.horizon(), rng);
    Ok(pair(id, traj, i, id, traj, j))
}

pub fn sample_same_trajectory_negative<R: Rng + ?Sized>(
    buffer: &ReplayBuffer,
    n: usize,
    rng: &mut R,
) -> Result<StatePair> {
    let (id, traj) = buffer.pick(rng)?;
    let horizon = traj.horizon();
    if horizon <= n {
        return Err(Error::Unsampleable(format!(
            "horizon {horizon} leaves no step pair more than {n} apart"
        )));
    }
    loop {
        let i = rng.random_range(0..=horizon);
        let j = rng.random_range(0..=horizon);
        if i.abs_diff(j) > n {
            return Ok(pair(id, traj, i, id, traj, j));
        }
    }
}

pub fn sample_cross_trajectory_negative<R: Rng + ?Sized>(buffer: &ReplayBuffer, rng: &mut R) -> Result<StatePair> {
    if buffer.len() < 2 {
        return Err(Error::NotEnoughTrajectories {
            needed: 2,
            have: buffer.len(),
        });
    }
    let a = rng.random_range(0..buffer.len());
    let mut b = rng.random_range(0..buffer.len() - 1);
    if b >= a {
        b += 1;
    }
    let (ia, ta) = &buffer.items[a];
    let (ib, tb) = &buffer.items[b];
    let i = rng.random_range(0..=ta.horizon());
    let j = rng.random_range(0..=tb.horizon());
    Ok(pair(*ia, ta, i, *ib, tb, j))
}

/// `per_set` pairs from each of `D+`, `D-1` and `D-2`.
pub fn sample_pair_batch<R: Rng + ?Sized>(
    buffer: &ReplayBuffer,
    n: usize,
    per_set: usize,
    rng: &mut R,
) -> Result<PairBatch> {
    if buffer.len() < 2 {
        return Err(Error::NotEnoughTrajectories {
            needed: 2,
            have: buffer.len(),
        });
    }
    let positives = (0..per_set)
        .map(|_| sample_positive_pair(buffer, n, rng))
        .collect::<Result<_>>()?;
    let same_trajectory_negatives = (0..per_set)
        .map(|_| sample_same_trajectory_negative(buffer, n, rng))
        .collect::<Result<_>>()?;
    let cross_trajectory_negatives = (0..per_set)
        .map(|_| sample_cross_trajectory_negative(buffer, rng))
        .collect::<Result<_>>()?;
    Ok(PairBatch {
        positives,
        same_trajectory_negatives,
        cross_trajectory_negatives,
    })
}

/// An anchor with one temporal neighbour and `k` negatives.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorSet {
    pub anchor: Vec<f64>,
    pub positive: Vec<f64>,
    pub negatives: Vec<Vec<f64>>,
}

/// Anchor/positive from `D+`; negatives alternate between `D-1` and `D-2`
/// partners of the same anchor trajectory.
pub fn sample_anchor_sets<R: Rng + ?Sized>(
    buffer: &ReplayBuffer,
    n: usize,
    batch_size: usize,
    negatives: usize,
    rng: &mut R,
) -> Result<Vec<AnchorSet>> {
    if negatives == 0 {
        return Err(Error::Unsampleable("at least one negative per anchor".into()));
    }
    (0..batch_size)
        .map(|_| {
            let p = sample_positive_pair(buffer, n, rng)?;
            let negatives = (0..negatives)
                .map(|k| {
                    let q = if k % 2 == 0 {
                        sample_same_trajectory_negative(buffer, n, rng)?
                    } else {
                        sample_cross_trajectory_negative(buffer, rng)?
                    };
                    Ok(q.second)
                })
                .collect::<Result<_>>()?;
            Ok(AnchorSet {
                anchor: p.first,
                positive: p.second,
                negatives,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn line_trajectory(horizon: usize, offset: f64) -> Trajectory {
        let obs = (0..=horizon).map(|t| vec![offset + t as f64, 0.0]).collect();
        let actions = (0..=horizon).map(|t| Action::Discrete(t % 5)).collect();
        Trajectory::new(obs, actions, vec![-1.0, -1.0]).unwrap()
    }

    #[test]
    fn fifo_eviction() {
        let mut buf = ReplayBuffer::new(2);
        for k in 0..3 {
            buf.append(line_trajectory(4, 100.0 * k as f64)).unwrap();
        }
        assert_eq!(buf.len(), 2);
        assert_eq!(buf.get(0).unwrap().observation(0)[0], 100.0);
        assert_eq!(buf.id(0), Some(1));
    }

    #[test]
    fn stored_bit_identical() {
        let mut buf = ReplayBuffer::new(4);
        let t = line_trajectory(3, 0.25);
        buf.append(t.clone()).unwrap();
        assert_eq!(buf.get(0), Some(&t));
    }

    #[test]
    fn mismatched_lengths_rejected() {
        let obs = vec![vec![0.0, 0.0]; 4];
        let acts = vec![Action::Discrete(0); 3];
        assert!(Trajectory::new(obs, acts, vec![0.0, 0.0]).is_err());
        let obs = vec![vec![0.0, 0.0], vec![0.0]];
        let acts = vec![Action::Discrete(0); 2];
        assert!(Trajectory::new(obs, acts, vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn horizon_two_has_three_expert_tuples() {
        let mut buf = ReplayBuffer::new(1);
        buf.append(line_trajectory(2, 0.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut seen = std::collections::BTreeSet::new();
        for tup in sample_expert_tuples(&buf, 500, &mut rng).unwrap() {
            seen.insert((tup.t, tup.t + tup.offset));
            assert_eq!(tup.goal[0], (tup.t + tup.offset) as f64);
        }
        assert_eq!(seen.into_iter().collect::<Vec<_>>(), vec![(0, 1), (0, 2), (1, 2)]);
    }

    #[test]
    fn original_tuples_copy_goal_and_final() {
        let mut buf = ReplayBuffer::new(4);
        buf.append(line_trajectory(6, 0.0)).unwrap();
        buf.append(line_trajectory(6, 50.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for tup in sample_original_tuples(&buf, 300, &mut rng).unwrap() {
            assert!(tup.t >= 1 && tup.t <= 6);
            assert_eq!(tup.goal, vec![-1.0, -1.0]);
            let base = if tup.trajectory_id == 0 { 0.0 } else { 50.0 };
            assert_eq!(tup.final_state[0], base + 6.0);
            assert_eq!(tup.state[0], base + tup.t as f64);
        }
    }

    #[test]
    fn empty_buffer_errors() {
        let buf = ReplayBuffer::new(3);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(sample_expert_tuples(&buf, 1, &mut rng), Err(Error::EmptyBuffer)));
        assert!(matches!(sample_original_tuples(&buf, 1, &mut rng), Err(Error::EmptyBuffer)));
    }

    #[test]
    fn pair_batch_needs_two_trajectories() {
        let mut buf = ReplayBuffer::new(3);
        buf.append(line_trajectory(50, 0.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            sample_pair_batch(&buf, 5, 4, &mut rng),
            Err(Error::NotEnoughTrajectories { .. })
        ));
    }

    #[test]
    fn threshold_examples() {
        // |10 - 16| = 6 > 5 qualifies as a far negative; |10 - 14| = 4 does not.
        assert!(10usize.abs_diff(16) > 5);
        assert!(10usize.abs_diff(14) <= 5);
        let mut buf = ReplayBuffer::new(3);
        buf.append(line_trajectory(50, 0.0)).unwrap();
        buf.append(line_trajectory(50, 100.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let batch = sample_pair_batch(&buf, 5, 300, &mut rng).unwrap();
        assert!(batch.positives.iter().all(|p| p.first_ref.t.abs_diff(p.second_ref.t) <= 5));
        assert!(batch
            .same_trajectory_negatives
            .iter()
            .all(|p| p.first_ref.t.abs_diff(p.second_ref.t) > 5));
    }

    #[test]
    fn deterministic_under_seed() {
        let mut buf = ReplayBuffer::new(8);
        for k in 0..4 {
            buf.append(line_trajectory(20, k as f64 * 30.0)).unwrap();
        }
        let a = sample_pair_batch(&buf, 5, 20, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let b = sample_pair_batch(&buf, 5, 20, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn tuples_survive_eviction() {
        let mut buf = ReplayBuffer::new(1);
        buf.append(line_trajectory(5, 0.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let tuples = sample_expert_tuples(&buf, 10, &mut rng).unwrap();
        buf.append(line_trajectory(5, 1000.0)).unwrap();
        assert!(tuples.iter().all(|t| t.state[0] < 10.0));
    }

    #[test]
    fn anchor_sets_shape() {
        let mut buf = ReplayBuffer::new(8);
        for k in 0..3 {
            buf.append(line_trajectory(30, k as f64 * 100.0)).unwrap();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let sets = sample_anchor_sets(&buf, 5, 7, 4, &mut rng).unwrap();
        assert_eq!(sets.len(), 7);
        assert!(sets.iter().all(|s| s.negatives.len() == 4));
        assert!(sample_anchor_sets(&buf, 5, 7, 0, &mut rng).is_err());
    }
}
