use rand::Rng;

use crate::env::{Action, ActionSpace};
use crate::error::{check_dim, Error, Result};
use crate::features::{argmax, push_one_hot, Features};
use crate::nn::{actor_gradient, logistic, AdamState, DenseNet, Grads, OutputActivation};
use crate::replay::ReplayBuffer;

pub const LATENT_DIM: usize = 64;
/// Success probability of the geometric future offset, about `1 - gamma`.
pub const FUTURE_P: f64 = 0.01;

/// `(s_t, a_t)` with a future state `s+` of the same trajectory and a state
/// `s-` from a different trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct CgcrlSample {
    pub state: Vec<f64>,
    pub action: Action,
    pub positive: Vec<f64>,
    pub negative: Vec<f64>,
    pub offset: usize,
}

/// Offset `k >= 1` with `P(k) ∝ (1 - p)^(k - 1) p`, truncated to `k <= max`,
/// drawn by inverting the truncated CDF.
pub fn geometric_offset<R: Rng + ?Sized>(max: usize, p: f64, rng: &mut R) -> usize {
    assert!(max >= 1 && p > 0.0 && p < 1.0);
    let q = 1.0 - p;
    let mass = 1.0 - q.powi(max as i32);
    let u: f64 = rng.random();
    let k = ((1.0 - u * mass).ln() / q.ln()).ceil() as usize;
    k.clamp(1, max)
}

pub fn sample_cgcrl_batch<R: Rng + ?Sized>(
    buffer: &ReplayBuffer,
    batch_size: usize,
    p: f64,
    rng: &mut R,
) -> Result<Vec<CgcrlSample>> {
    if buffer.len() < 2 {
        return Err(Error::NotEnoughTrajectories {
            needed: 2,
            have: buffer.len(),
        });
    }
    (0..batch_size)
        .map(|_| {
            let a = rng.random_range(0..buffer.len());
            let mut b = rng.random_range(0..buffer.len() - 1);
            if b >= a {
                b += 1;
            }
            let traj = buffer.get(a).expect("index in range");
            let other = buffer.get(b).expect("index in range");
            let t = rng.random_range(0..traj.horizon());
            let offset = geometric_offset(traj.horizon() - t, p, rng);
            Ok(CgcrlSample {
                state: traj.observation(t).to_vec(),
                action: traj.actions()[t].clone(),
                positive: traj.observation(t + offset).to_vec(),
                negative: other.observation(rng.random_range(0..=other.horizon())).to_vec(),
                offset,
            })
        })
        .collect()
}

fn softplus(z: f64) -> f64 {
    if z > 30.0 {
        z
    } else {
        z.exp().ln_1p()
    }
}

/// `-[log sigma(f+) + log(1 - sigma(f-))]`.
pub fn cgcrl_loss(f_pos: f64, f_neg: f64) -> f64 {
    softplus(-f_pos) + softplus(f_neg)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Contrastive critic `f(s, a, g) = phi(s, a) . psi(g)`; continuous action
/// spaces add an actor trained to maximise `f`.
#[derive(Debug, Clone)]
pub struct Cgcrl {
    phi: DenseNet,
    psi: DenseNet,
    phi_adam: AdamState,
    psi_adam: AdamState,
    actor: Option<(DenseNet, AdamState)>,
    space: ActionSpace,
    features: Features,
}

impl Cgcrl {
    pub fn new<R: Rng + ?Sized>(obs_scale: Vec<f64>, space: ActionSpace, hidden: &[usize], lr: f64, rng: &mut R) -> Self {
        let d = obs_scale.len();
        let a_width = match space {
            ActionSpace::Discrete(n) | ActionSpace::Continuous(n) => n,
        };
        let phi = DenseNet::mlp(d + a_width, hidden, LATENT_DIM, OutputActivation::Linear, rng);
        let psi = DenseNet::mlp(d, hidden, LATENT_DIM, OutputActivation::Linear, rng);
        let actor = match space {
            ActionSpace::Discrete(_) => None,
            ActionSpace::Continuous(n) => {
                let net = DenseNet::mlp(2 * d, hidden, n, OutputActivation::Logistic, rng);
                let adam = AdamState::for_net(&net, lr);
                Some((net, adam))
            }
        };
        Cgcrl {
            phi_adam: AdamState::for_net(&phi, lr),
            psi_adam: AdamState::for_net(&psi, lr),
            phi,
            psi,
            actor,
            space,
            features: Features::new(obs_scale),
        }
    }

    pub fn phi(&self) -> &DenseNet {
        &self.phi
    }

    pub fn psi(&self) -> &DenseNet {
        &self.psi
    }

    pub fn actor(&self) -> Option<&DenseNet> {
        self.actor.as_ref().map(|(net, _)| net)
    }

    pub fn has_actor(&self) -> bool {
        self.actor.is_some()
    }

    fn push_state_action(&self, out: &mut Vec<f64>, s: &[f64], a: &Action) -> Result<()> {
        check_dim(self.features.obs_dim(), s.len())?;
        self.features.push_obs(out, s);
        match (self.space, a) {
            (ActionSpace::Discrete(n), Action::Discrete(i)) if *i < n => push_one_hot(out, *i, n),
            (ActionSpace::Continuous(n), Action::Continuous(v)) if v.len() == n => out.extend_from_slice(v),
            _ => {
                return Err(Error::InvalidAction {
                    env: "contrastive critic",
                    detail: format!("{a:?}"),
                })
            }
        }
        Ok(())
    }

    fn embed_goal(&self, g: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.features.obs_dim(), g.len())?;
        let mut x = Vec::with_capacity(g.len());
        self.features.push_obs(&mut x, g);
        self.psi.forward(&x)
    }

    /// `f(phi(s, a), psi(g))`.
    pub fn score(&self, s: &[f64], a: &Action, g: &[f64]) -> Result<f64> {
        let mut x = Vec::new();
        self.push_state_action(&mut x, s, a)?;
        Ok(dot(&self.phi.forward(&x)?, &self.embed_goal(g)?))
    }

    /// Scores of every discrete action.
    pub fn action_scores(&self, s: &[f64], g: &[f64]) -> Result<Vec<f64>> {
        let ActionSpace::Discrete(n) = self.space else {
            return Err(Error::Config("action scores need a discrete action space".into()));
        };
        let mut x = Vec::with_capacity(n * self.phi.input_dim());
        for a in 0..n {
            self.push_state_action(&mut x, s, &Action::Discrete(a))?;
        }
        let v = self.embed_goal(g)?;
        let u = self.phi.forward_batch(&x, n)?;
        Ok(u.chunks_exact(LATENT_DIM).map(|r| dot(r, &v)).collect())
    }

    pub fn cgcrl_act(&self, s: &[f64], g: &[f64]) -> Result<Action> {
        match &self.actor {
            None => Ok(Action::Discrete(argmax(&self.action_scores(s, g)?))),
            Some((actor, _)) => {
                check_dim(self.features.obs_dim(), s.len())?;
                check_dim(self.features.obs_dim(), g.len())?;
                Ok(Action::Continuous(actor.forward(&self.features.pair(s, g))?))
            }
        }
    }

    /// Loss and gradients for `phi` and `psi`.
    pub fn critic_grads(&self, batch: &[CgcrlSample]) -> Result<(f64, Grads, Grads)> {
        if batch.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let n = batch.len();
        let mut xs = Vec::with_capacity(n * self.phi.input_dim());
        let mut xg = Vec::with_capacity(2 * n * self.features.obs_dim());
        for b in batch {
            self.push_state_action(&mut xs, &b.state, &b.action)?;
            check_dim(self.features.obs_dim(), b.positive.len())?;
            self.features.push_obs(&mut xg, &b.positive);
        }
        for b in batch {
            check_dim(self.features.obs_dim(), b.negative.len())?;
            self.features.push_obs(&mut xg, &b.negative);
        }
        let phi_tape = self.phi.forward_tape(&xs, n)?;
        let psi_tape = self.psi.forward_tape(&xg, 2 * n)?;
        let inv = 1.0 / n as f64;
        let mut loss = 0.0;
        let mut du = vec![0.0; n * LATENT_DIM];
        let mut dv = vec![0.0; 2 * n * LATENT_DIM];
        for k in 0..n {
            let u = phi_tape.row(k);
            let vp = psi_tape.row(k);
            let vn = psi_tape.row(n + k);
            let (fp, fneg) = (dot(u, vp), dot(u, vn));
            loss += cgcrl_loss(fp, fneg);
            let gp = (logistic(fp) - 1.0) * inv;
            let gn = logistic(fneg) * inv;
            for j in 0..LATENT_DIM {
                du[k * LATENT_DIM + j] = gp * vp[j] + gn * vn[j];
                dv[k * LATENT_DIM + j] = gp * u[j];
                dv[(n + k) * LATENT_DIM + j] = gn * u[j];
            }
        }
        let mut g_phi = Grads::zeros_like(&self.phi);
        let mut g_psi = Grads::zeros_like(&self.psi);
        self.phi.backward_tape(&phi_tape, &du, &mut g_phi, false)?;
        self.psi.backward_tape(&psi_tape, &dv, &mut g_psi, false)?;
        Ok((loss * inv, g_phi, g_psi))
    }

    pub fn cgcrl_update(&mut self, batch: &[CgcrlSample]) -> Result<f64> {
        let (loss, g_phi, g_psi) = self.critic_grads(batch)?;
        self.phi_adam.step(&mut self.phi, &g_phi)?;
        self.psi_adam.step(&mut self.psi, &g_psi)?;
        Ok(loss)
    }

    /// `-mean f(phi(s, pi(s, g)), psi(g))` and the actor gradient; the critic
    /// is held fixed.
    pub fn actor_grads(&self, rows: &[(&[f64], &[f64])]) -> Result<(f64, Grads)> {
        let Some((actor, _)) = &self.actor else {
            return Err(Error::Config("discrete contrastive agent has no actor".into()));
        };
        if rows.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let d = self.features.obs_dim();
        let a_width = actor.output_dim();
        let mut actor_in = Vec::with_capacity(rows.len() * 2 * d);
        let mut critic_in = Vec::with_capacity(rows.len() * (d + a_width));
        let mut goals = Vec::with_capacity(rows.len() * d);
        for (s, g) in rows {
            check_dim(d, s.len())?;
            check_dim(d, g.len())?;
            self.features.push_pair(&mut actor_in, s, g);
            self.features.push_obs(&mut critic_in, s);
            critic_in.extend(std::iter::repeat_n(0.0, a_width));
            self.features.push_obs(&mut goals, g);
        }
        let v = self.psi.forward_batch(&goals, rows.len())?;
        let inv = 1.0 / rows.len() as f64;
        actor_gradient(actor, &actor_in, &self.phi, critic_in, d, rows.len(), |u| {
            let loss = -u
                .chunks_exact(LATENT_DIM)
                .zip(v.chunks_exact(LATENT_DIM))
                .map(|(a, b)| dot(a, b))
                .sum::<f64>()
                * inv;
            (loss, v.iter().map(|x| -x * inv).collect())
        })
    }

    pub fn actor_update(&mut self, rows: &[(&[f64], &[f64])]) -> Result<f64> {
        let (loss, grads) = self.actor_grads(rows)?;
        let (actor, adam) = self.actor.as_mut().expect("checked by actor_grads");
        adam.step(actor, &grads)?;
        Ok(loss)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use crate::replay::Trajectory;

    #[test]
    fn loss_limits() {
        assert!((cgcrl_loss(0.0, 0.0) - 2.0 * std::f64::consts::LN_2).abs() < 1e-12);
        assert!(cgcrl_loss(60.0, -60.0) < 1e-20);
        assert!(cgcrl_loss(-60.0, 60.0) > 100.0);
    }

    #[test]
    fn truncated_geometric_matches_pmf() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (max, p) = (6, 0.3);
        let draws = 200_000;
        let mut counts = vec![0usize; max + 1];
        for _ in 0..draws {
            counts[geometric_offset(max, p, &mut rng)] += 1;
        }
        let norm: f64 = (1..=max).map(|k| (1.0 - p).powi(k as i32 - 1) * p).sum();
        for k in 1..=max {
            let want = (1.0 - p).powi(k as i32 - 1) * p / norm;
            let got = counts[k] as f64 / draws as f64;
            let sd = (want * (1.0 - want) / draws as f64).sqrt();
            assert!((got - want).abs() < 5.0 * sd, "k={k}: {got} vs {want}");
        }
        assert_eq!(counts[0], 0);
        for _ in 0..100 {
            assert_eq!(geometric_offset(1, FUTURE_P, &mut rng), 1);
        }
    }

    fn buffer() -> ReplayBuffer {
        let mut b = ReplayBuffer::new(8);
        for k in 0..3 {
            let obs = (0..9).map(|t| vec![t as f64 * 0.1, k as f64]).collect();
            b.append(Trajectory::new(obs, vec![Action::Discrete(k); 9], vec![0.0, 0.0]).unwrap())
                .unwrap();
        }
        b
    }

    #[test]
    fn negatives_come_from_other_trajectories() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let b = buffer();
        for s in sample_cgcrl_batch(&b, 500, FUTURE_P, &mut rng).unwrap() {
            // the second coordinate identifies the trajectory
            assert_ne!(s.state[1], s.negative[1]);
            assert_eq!(s.state[1], s.positive[1]);
            assert!(s.positive[0] > s.state[0]);
        }
        let mut one = ReplayBuffer::new(2);
        one.append(b.get(0).unwrap().clone()).unwrap();
        assert!(sample_cgcrl_batch(&one, 4, FUTURE_P, &mut rng).is_err());
    }

    #[test]
    fn critic_gradient_matches_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = Cgcrl::new(vec![1.0; 2], ActionSpace::Discrete(5), &[5], 1e-3, &mut rng);
        let batch = sample_cgcrl_batch(&buffer(), 4, 0.3, &mut rng).unwrap();
        let (_, g_phi, g_psi) = m.critic_grads(&batch).unwrap();
        let h = 1e-6;
        for (which, grads) in [(0, &g_phi), (1, &g_psi)] {
            let count = if which == 0 { m.phi.param_count() } else { m.psi.param_count() };
            for i in (0..count).step_by(7) {
                let nudge = |delta: f64| {
                    let mut c = m.clone();
                    let net = if which == 0 { &mut c.phi } else { &mut c.psi };
                    net.params_mut()[i] += delta;
                    c.critic_grads(&batch).unwrap().0
                };
                let fd = (nudge(h) - nudge(-h)) / (2.0 * h);
                assert!((fd - grads.0[i]).abs() < 1e-5, "{which}/{i}: {fd} vs {}", grads.0[i]);
            }
        }
    }

    #[test]
    fn discrete_choice_is_argmax_of_scores() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let m = Cgcrl::new(vec![1.0; 2], ActionSpace::Discrete(5), &[8], 1e-3, &mut rng);
        let scores = m.action_scores(&[0.1, 0.2], &[0.5, -0.5]).unwrap();
        let Action::Discrete(a) = m.cgcrl_act(&[0.1, 0.2], &[0.5, -0.5]).unwrap() else { panic!() };
        assert_eq!(a, argmax(&scores));
        assert!((m.score(&[0.1, 0.2], &Action::Discrete(a), &[0.5, -0.5]).unwrap() - scores[a]).abs() < 1e-12);
    }

    #[test]
    fn continuous_actor_gradient_matches_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = Cgcrl::new(vec![1.0; 2], ActionSpace::Continuous(4), &[5], 1e-3, &mut rng);
        let rows: [(&[f64], &[f64]); 2] = [(&[0.1, 0.2], &[0.3, 0.4]), (&[-0.4, 0.0], &[0.6, -0.2])];
        let (_, g) = m.actor_grads(&rows).unwrap();
        let h = 1e-6;
        let n = m.actor.as_ref().unwrap().0.param_count();
        for i in (0..n).step_by(3) {
            let nudge = |delta: f64| {
                let mut c = m.clone();
                c.actor.as_mut().unwrap().0.params_mut()[i] += delta;
                c.actor_grads(&rows).unwrap().0
            };
            let fd = (nudge(h) - nudge(-h)) / (2.0 * h);
            assert!((fd - g.0[i]).abs() < 1e-5, "{i}: {fd} vs {}", g.0[i]);
        }
        let Action::Continuous(a) = m.cgcrl_act(&[0.0, 0.0], &[0.2, 0.2]).unwrap() else { panic!() };
        assert!(a.iter().all(|v| (0.0..=1.0).contains(v)));
    }
}
