use super::{DenseNet, Grads};
use crate::error::{check_dim, Result};

/// Bias-corrected Adam moments for one network.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step_count: u64,
    first_moment: Vec<f64>,
    second_moment: Vec<f64>,
}

impl AdamState {
    pub fn new(param_count: usize, lr: f64) -> Self {
        AdamState {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step_count: 0,
            first_moment: vec![0.0; param_count],
            second_moment: vec![0.0; param_count],
        }
    }

    pub fn for_net(net: &DenseNet, lr: f64) -> Self {
        Self::new(net.param_count(), lr)
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn step(&mut self, net: &mut DenseNet, grads: &Grads) -> Result<()> {
        self.step_slice(net.params_mut(), &grads.0)
    }

    pub fn step_slice(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        check_dim(self.first_moment.len(), params.len())?;
        check_dim(params.len(), grads.len())?;
        self.step_count += 1;
        let t = self.step_count as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for (((p, &g), m), v) in params
            .iter_mut()
            .zip(grads)
            .zip(&mut self.first_moment)
            .zip(&mut self.second_moment)
        {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_params() {
        let mut params = vec![0.3, -1.2];
        let mut adam = AdamState::new(2, 1e-3);
        adam.step_slice(&mut params, &[0.0, 0.0]).unwrap();
        assert_eq!(params, vec![0.3, -1.2]);
        assert_eq!(adam.step_count(), 1);
    }

    #[test]
    fn first_step_is_lr_times_sign() {
        for g in [5.0, -0.02, 1e-3] {
            let mut p = [1.0];
            let mut adam = AdamState::new(1, 1e-3);
            adam.step_slice(&mut p, &[g]).unwrap();
            let moved = 1.0 - p[0];
            assert!((moved - 1e-3 * f64::signum(g)).abs() < 1e-8, "{moved}");
        }
    }

    #[test]
    fn two_step_hand_trace() {
        // g1 = 0.5, g2 = -0.25, lr = 0.001, p0 = 1
        // m1 = 0.05, v1 = 0.00025, m_hat = 0.5, v_hat = 0.25 -> p1 = 1 - 0.001*0.5/(0.5+1e-8)
        // m2 = 0.045 - 0.025 = 0.02, v2 = 0.00024975 + 0.0000625 = 0.00031225
        // m_hat = 0.02/0.19, v_hat = 0.00031225/0.001999
        let p1 = 1.0 - 0.001 * 0.5 / (0.5 + 1e-8);
        let m_hat = 0.02 / (1.0 - 0.81);
        let v_hat: f64 = 0.000_312_25 / (1.0 - 0.998_001);
        let p2 = p1 - 0.001 * m_hat / (v_hat.sqrt() + 1e-8);

        let mut p = [1.0];
        let mut adam = AdamState::new(1, 0.001);
        adam.step_slice(&mut p, &[0.5]).unwrap();
        assert!((p[0] - p1).abs() < 1e-10);
        adam.step_slice(&mut p, &[-0.25]).unwrap();
        assert!((p[0] - p2).abs() < 1e-10);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let mut adam = AdamState::new(3, 1e-3);
        assert!(adam.step_slice(&mut [0.0; 2], &[0.0; 2]).is_err());
    }
}
