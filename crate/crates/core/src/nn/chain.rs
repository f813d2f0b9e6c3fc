use super::{DenseNet, Grads};
use crate::error::{check_dim, Result};

/// Actor gradient for a loss that sees the actor only through a frozen
/// critic.
///
/// Row `b` of `critic_input` must leave columns `action_at..action_at + d`
/// free; they are filled with the actor's output for row `b` of
/// `actor_input`. `loss_grad` maps the critic outputs to the loss and its
/// gradient with respect to those outputs. The critic's parameters are not
/// modified and its parameter gradient is discarded.
pub fn actor_gradient<F>(
    actor: &DenseNet,
    actor_input: &[f64],
    critic: &DenseNet,
    mut critic_input: Vec<f64>,
    action_at: usize,
    rows: usize,
    loss_grad: F,
) -> Result<(f64, Grads)>
where
    F: FnOnce(&[f64]) -> (f64, Vec<f64>),
{
    let d = actor.output_dim();
    let width = critic.input_dim();
    check_dim(rows * width, critic_input.len())?;
    let actor_tape = actor.forward_tape(actor_input, rows)?;
    let actions = actor_tape.output();
    for (b, row) in critic_input.chunks_exact_mut(width).enumerate() {
        row[action_at..action_at + d].copy_from_slice(&actions[b * d..(b + 1) * d]);
    }
    let critic_tape = critic.forward_tape(&critic_input, rows)?;
    let (loss, out_grad) = loss_grad(critic_tape.output());
    let mut scratch = Grads::zeros_like(critic);
    let input_grad = critic
        .backward_tape(&critic_tape, &out_grad, &mut scratch, true)?
        .expect("input gradient requested");
    let action_grad: Vec<f64> = input_grad
        .chunks_exact(width)
        .flat_map(|r| r[action_at..action_at + d].iter().copied())
        .collect();
    let mut grads = Grads::zeros_like(actor);
    actor.backward_tape(&actor_tape, &action_grad, &mut grads, false)?;
    Ok((loss, grads))
}
