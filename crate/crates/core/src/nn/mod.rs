//! Dense feed-forward networks trained with hand-written backpropagation.
//!
//! Every learner in the crate is built from [`DenseNet`]: SiLU hidden layers
//! followed by a configurable output map. Parameters live in one flat vector
//! (per layer: row-major `out x in` weights, then `out` biases) so that Adam,
//! snapshots and soft target updates work on plain slices.
//!
//! Batched passes use row-major `batch x width` matrices.

mod adam;
mod chain;
mod loss;
mod snapshot;

pub use adam::AdamState;
pub use chain::actor_gradient;
pub use loss::{bce, bce_grad, clamp_prob, PROB_EPS};
pub use snapshot::{read_snapshot, write_snapshot};

use rand::Rng;

use crate::error::{check_dim, Error, Result};

/// Default hidden widths.
pub const DEFAULT_HIDDEN: [usize; 2] = [400, 300];

#[inline]
pub fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

#[inline]
pub fn silu(z: f64) -> f64 {
    z * logistic(z)
}

#[inline]
fn silu_deriv(z: f64) -> f64 {
    let s = logistic(z);
    s * (1.0 + z * (1.0 - s))
}

#[inline]
fn softplus(z: f64) -> f64 {
    if z > 30.0 {
        z
    } else {
        z.exp().ln_1p()
    }
}

/// Map applied to the last layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputActivation {
    /// Per-element logistic, clamped to `[PROB_EPS, 1 - PROB_EPS]`.
    Logistic,
    Linear,
    /// `ln(1 + e^z)`, keeps outputs nonnegative.
    Softplus,
}

impl OutputActivation {
    pub(crate) fn code(self) -> u8 {
        match self {
            OutputActivation::Logistic => 0,
            OutputActivation::Linear => 1,
            OutputActivation::Softplus => 2,
        }
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(OutputActivation::Logistic),
            1 => Some(OutputActivation::Linear),
            2 => Some(OutputActivation::Softplus),
            _ => None,
        }
    }

    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            OutputActivation::Logistic => logistic(z),
            OutputActivation::Linear => z,
            OutputActivation::Softplus => softplus(z),
        }
    }

    /// Derivative expressed through the pre-activation `z` and the raw output `y`.
    #[inline]
    fn deriv(self, z: f64, y: f64) -> f64 {
        match self {
            OutputActivation::Logistic => y * (1.0 - y),
            OutputActivation::Linear => 1.0,
            OutputActivation::Softplus => logistic(z),
        }
    }
}

/// Gradient of a scalar loss with respect to every parameter of a [`DenseNet`].
#[derive(Debug, Clone, PartialEq)]
pub struct Grads(pub Vec<f64>);

impl Grads {
    pub fn zeros_like(net: &DenseNet) -> Self {
        Grads(vec![0.0; net.param_count()])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn add_assign(&mut self, other: &Grads) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += b;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, g| m.max(g.abs()))
    }
}

/// Intermediate values of a batched forward pass, kept for backpropagation.
#[derive(Debug, Clone)]
pub struct Tape {
    batch: usize,
    /// `inputs[l]` is the input to layer `l`, shape `batch x dims[l]`.
    inputs: Vec<Vec<f64>>,
    /// Pre-activations of each layer.
    pre: Vec<Vec<f64>>,
    /// Unclamped output activations.
    raw_out: Vec<f64>,
    out: Vec<f64>,
}

impl Tape {
    pub fn batch(&self) -> usize {
        self.batch
    }

    /// Network outputs, row-major `batch x out_dim` (clamped if logistic).
    pub fn output(&self) -> &[f64] {
        &self.out
    }

    pub fn row(&self, b: usize) -> &[f64] {
        let w = self.out.len() / self.batch;
        &self.out[b * w..(b + 1) * w]
    }
}

/// A fixed-shape multilayer perceptron.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseNet {
    dims: Vec<usize>,
    output: OutputActivation,
    params: Vec<f64>,
}

pub(crate) fn param_count_for(dims: &[usize]) -> usize {
    dims.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

impl DenseNet {
    /// Net with every parameter zero.
    pub fn zeros(dims: &[usize], output: OutputActivation) -> Self {
        assert!(dims.len() >= 2, "a network needs an input and an output width");
        assert!(dims.iter().all(|&d| d > 0), "layer widths must be positive");
        DenseNet {
            dims: dims.to_vec(),
            output,
            params: vec![0.0; param_count_for(dims)],
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn new<R: Rng + ?Sized>(dims: &[usize], output: OutputActivation, rng: &mut R) -> Self {
        let mut net = Self::zeros(dims, output);
        let mut offset = 0;
        for w in dims.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for p in &mut net.params[offset..offset + fan_in * fan_out] {
                *p = rng.random_range(-limit..limit);
            }
            offset += fan_in * fan_out + fan_out;
        }
        net
    }

    /// `input -> hidden... -> output` layer widths.
    pub fn mlp<R: Rng + ?Sized>(
        input: usize,
        hidden: &[usize],
        output: usize,
        activation: OutputActivation,
        rng: &mut R,
    ) -> Self {
        let mut dims = Vec::with_capacity(hidden.len() + 2);
        dims.push(input);
        dims.extend_from_slice(hidden);
        dims.push(output);
        Self::new(&dims, activation, rng)
    }

    pub(crate) fn from_parts(
        dims: Vec<usize>,
        output: OutputActivation,
        params: Vec<f64>,
    ) -> Result<Self> {
        if dims.len() < 2 || dims.iter().any(|&d| d == 0) {
            return Err(Error::Snapshot("invalid layer widths".into()));
        }
        check_dim(param_count_for(&dims), params.len())?;
        Ok(DenseNet {
            dims,
            output,
            params,
        })
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.dims.last().unwrap()
    }

    pub fn output_activation(&self) -> OutputActivation {
        self.output
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// `self <- tau * other + (1 - tau) * self`.
    pub fn soft_update_from(&mut self, other: &DenseNet, tau: f64) {
        assert_eq!(self.dims, other.dims);
        for (p, q) in self.params.iter_mut().zip(&other.params) {
            *p = tau * q + (1.0 - tau) * *p;
        }
    }

    fn layer_offsets(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        let mut offset = 0;
        self.dims.windows(2).map(move |w| {
            let start = offset;
            offset += w[0] * w[1] + w[1];
            (start, w[0], w[1])
        })
    }

    /// Output for a single input vector.
    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward_tape(input, 1)?.out)
    }

    /// Outputs for `batch` row-major inputs.
    pub fn forward_batch(&self, inputs: &[f64], batch: usize) -> Result<Vec<f64>> {
        Ok(self.forward_tape(inputs, batch)?.out)
    }

    pub fn forward_tape(&self, inputs: &[f64], batch: usize) -> Result<Tape> {
        if batch == 0 {
            return Err(Error::EmptyBatch);
        }
        check_dim(batch * self.input_dim(), inputs.len())?;
        let n_layers = self.dims.len() - 1;
        let mut tape = Tape {
            batch,
            inputs: Vec::with_capacity(n_layers),
            pre: Vec::with_capacity(n_layers),
            raw_out: Vec::new(),
            out: Vec::new(),
        };
        let mut act = inputs.to_vec();
        for (l, (offset, fan_in, fan_out)) in self.layer_offsets().enumerate() {
            let weights = &self.params[offset..offset + fan_in * fan_out];
            let biases = &self.params[offset + fan_in * fan_out..offset + fan_in * fan_out + fan_out];
            let mut z = Vec::with_capacity(batch * fan_out);
            for _ in 0..batch {
                z.extend_from_slice(biases);
            }
            // z (batch x out) += act (batch x in) * W^T
            gemm(
                batch, fan_in, fan_out,
                &act, fan_in, 1,
                weights, 1, fan_in,
                1.0, &mut z, fan_out, 1,
            );
            let next: Vec<f64> = if l + 1 < n_layers {
                z.iter().map(|&v| silu(v)).collect()
            } else {
                z.iter().map(|&v| self.output.apply(v)).collect()
            };
            tape.inputs.push(std::mem::replace(&mut act, next));
            tape.pre.push(z);
        }
        tape.out = match self.output {
            OutputActivation::Logistic => act.iter().map(|&y| clamp_prob(y)).collect(),
            _ => act.clone(),
        };
        tape.raw_out = act;
        Ok(tape)
    }

    /// Backpropagates `output_grad` (dL/d output, row-major `batch x out_dim`,
    /// taken with respect to the unclamped outputs) through a recorded pass.
    ///
    /// Parameter gradients are accumulated into `grads`. When `want_input_grad`
    /// is set, dL/d input is returned as well.
    pub fn backward_tape(
        &self,
        tape: &Tape,
        output_grad: &[f64],
        grads: &mut Grads,
        want_input_grad: bool,
    ) -> Result<Option<Vec<f64>>> {
        let batch = tape.batch;
        check_dim(batch * self.output_dim(), output_grad.len())?;
        check_dim(self.param_count(), grads.0.len())?;
        let n_layers = self.dims.len() - 1;
        let layers: Vec<_> = self.layer_offsets().collect();

        let last_pre = &tape.pre[n_layers - 1];
        let mut delta: Vec<f64> = output_grad
            .iter()
            .zip(last_pre.iter().zip(&tape.raw_out))
            .map(|(g, (&z, &y))| g * self.output.deriv(z, y))
            .collect();

        for l in (0..n_layers).rev() {
            let (offset, fan_in, fan_out) = layers[l];
            let input = &tape.inputs[l];
            let (gw, rest) = grads.0[offset..].split_at_mut(fan_in * fan_out);
            // dW (out x in) += delta^T (out x batch) * input (batch x in)
            gemm(
                fan_out, batch, fan_in,
                &delta, 1, fan_out,
                input, fan_in, 1,
                1.0, gw, fan_in, 1,
            );
            let gb = &mut rest[..fan_out];
            for row in delta.chunks_exact(fan_out) {
                for (b, d) in gb.iter_mut().zip(row) {
                    *b += d;
                }
            }
            if l == 0 && !want_input_grad {
                break;
            }
            let weights = &self.params[offset..offset + fan_in * fan_out];
            let mut upstream = vec![0.0; batch * fan_in];
            // d input (batch x in) = delta (batch x out) * W (out x in)
            gemm(
                batch, fan_out, fan_in,
                &delta, fan_out, 1,
                weights, fan_in, 1,
                0.0, &mut upstream, fan_in, 1,
            );
            if l == 0 {
                return Ok(Some(upstream));
            }
            let prev_pre = &tape.pre[l - 1];
            for (u, &z) in upstream.iter_mut().zip(prev_pre) {
                *u *= silu_deriv(z);
            }
            delta = upstream;
        }
        Ok(None)
    }

    /// Parameter gradients for a single input.
    pub fn backward(&self, input: &[f64], output_grad: &[f64]) -> Result<Grads> {
        let tape = self.forward_tape(input, 1)?;
        let mut grads = Grads::zeros_like(self);
        self.backward_tape(&tape, output_grad, &mut grads, false)?;
        Ok(grads)
    }
}

/// `c = alpha * c + a * b` over strided row/column layouts.
#[allow(clippy::too_many_arguments)]
#[rustfmt::skip]
fn gemm(
    m: usize, k: usize, n: usize,
    a: &[f64], rsa: usize, csa: usize,
    b: &[f64], rsb: usize, csb: usize,
    beta: f64, c: &mut [f64], rsc: usize, csc: usize,
) {
    if m == 0 || n == 0 {
        return;
    }
    let extent = |rows: usize, cols: usize, rs: usize, cs: usize| {
        (rows - 1) * rs + (cols - 1) * cs + 1
    };
    if k > 0 {
        assert!(a.len() >= extent(m, k, rsa, csa));
        assert!(b.len() >= extent(k, n, rsb, csb));
    }
    assert!(c.len() >= extent(m, n, rsc, csc));
    // SAFETY: the extents asserted above cover every element matrixmultiply
    // touches for these shapes and strides.
    unsafe {
        matrixmultiply::dgemm(
            m, k, n,
            1.0,
            a.as_ptr(), rsa as isize, csa as isize,
            b.as_ptr(), rsb as isize, csb as isize,
            beta,
            c.as_mut_ptr(), rsc as isize, csc as isize,
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Straight-line forward pass with explicit loops, independent of `gemm`.
    fn reference_forward(net: &DenseNet, input: &[f64]) -> Vec<f64> {
        let mut act = input.to_vec();
        let mut offset = 0;
        let n_layers = net.dims.len() - 1;
        for l in 0..n_layers {
            let (fi, fo) = (net.dims[l], net.dims[l + 1]);
            let mut next = vec![0.0; fo];
            for o in 0..fo {
                let mut z = net.params[offset + fi * fo + o];
                for i in 0..fi {
                    z += net.params[offset + o * fi + i] * act[i];
                }
                next[o] = if l + 1 < n_layers {
                    z / (1.0 + (-z).exp())
                } else {
                    match net.output {
                        OutputActivation::Logistic => clamp_prob(1.0 / (1.0 + (-z).exp())),
                        OutputActivation::Linear => z,
                        OutputActivation::Softplus => (1.0 + z.exp()).ln(),
                    }
                };
            }
            offset += fi * fo + fo;
            act = next;
        }
        act
    }

    #[test]
    fn zero_net_outputs_one_half() {
        let net = DenseNet::zeros(&[3, 7, 5, 4], OutputActivation::Logistic);
        let out = net.forward(&[0.3, -2.0, 9.0]).unwrap();
        assert_eq!(out, vec![0.5; 4]);
    }

    #[test]
    fn silu_values() {
        assert_eq!(silu(0.0), 0.0);
        assert!((silu(1.0) - 0.731_058_578_630_004_9).abs() < 1e-12);
    }

    #[test]
    fn forward_matches_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for output in [
            OutputActivation::Logistic,
            OutputActivation::Linear,
            OutputActivation::Softplus,
        ] {
            let net = DenseNet::new(&[4, 9, 6, 3], output, &mut rng);
            for _ in 0..20 {
                let x: Vec<f64> = (0..4).map(|_| rng.random_range(-2.0..2.0)).collect();
                let got = net.forward(&x).unwrap();
                let want = reference_forward(&net, &x);
                for (g, w) in got.iter().zip(&want) {
                    assert!((g - w).abs() < 1e-12, "{g} vs {w}");
                }
            }
        }
    }

    #[test]
    fn batch_rows_match_single_forward() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net = DenseNet::new(&[2, 8, 3], OutputActivation::Logistic, &mut rng);
        let xs: Vec<f64> = (0..10).map(|_| rng.random_range(-1.0..1.0)).collect();
        let batch = net.forward_batch(&xs, 5).unwrap();
        for b in 0..5 {
            let single = net.forward(&xs[2 * b..2 * b + 2]).unwrap();
            assert_eq!(&batch[3 * b..3 * b + 3], single.as_slice());
        }
    }

    #[test]
    fn forward_rejects_wrong_width() {
        let net = DenseNet::zeros(&[3, 4, 2], OutputActivation::Logistic);
        assert!(matches!(
            net.forward(&[1.0, 2.0]),
            Err(Error::DimensionMismatch { expected: 3, got: 2 })
        ));
        assert!(net.backward(&[1.0, 2.0, 3.0], &[1.0]).is_err());
    }

    #[test]
    fn zero_output_grad_gives_zero_grads() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = DenseNet::new(&[3, 5, 2], OutputActivation::Logistic, &mut rng);
        let g = net.backward(&[0.1, 0.2, 0.3], &[0.0, 0.0]).unwrap();
        assert!(g.0.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_logistic_unit_bce_derivative() {
        let mut net = DenseNet::zeros(&[2, 1], OutputActivation::Logistic);
        net.params_mut().copy_from_slice(&[0.7, -0.4, 0.0]);
        let x = [0.5, 2.0];
        let y = net.forward(&x).unwrap()[0];
        let g = net.backward(&x, &[bce_grad(y, 1.0)]).unwrap();
        let p = logistic(0.7 * 0.5 - 0.4 * 2.0);
        assert!((g.0[0] - (p - 1.0) * x[0]).abs() < 1e-12);
        assert!((g.0[1] - (p - 1.0) * x[1]).abs() < 1e-12);
        assert!((g.0[2] - (p - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn soft_update_moves_by_tau() {
        let a = DenseNet::zeros(&[1, 1], OutputActivation::Linear);
        let mut b = a.clone();
        let mut live = a.clone();
        live.params_mut().copy_from_slice(&[2.0, 4.0]);
        b.soft_update_from(&live, 0.25);
        assert_eq!(b.params(), &[0.5, 1.0]);
    }
}
