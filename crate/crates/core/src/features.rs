//! Network input assembly: scaled observations, goals and one-hot actions.

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Features {
    scale: Vec<f64>,
}

impl Features {
    pub fn new(scale: Vec<f64>) -> Self {
        Features { scale }
    }

    pub fn obs_dim(&self) -> usize {
        self.scale.len()
    }

    pub fn push_obs(&self, out: &mut Vec<f64>, obs: &[f64]) {
        debug_assert_eq!(obs.len(), self.scale.len());
        out.extend(obs.iter().zip(&self.scale).map(|(v, s)| v * s));
    }

    pub fn push_pair(&self, out: &mut Vec<f64>, a: &[f64], b: &[f64]) {
        self.push_obs(out, a);
        self.push_obs(out, b);
    }

    pub fn pair(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * self.obs_dim());
        self.push_pair(&mut out, a, b);
        out
    }
}

pub(crate) fn push_one_hot(out: &mut Vec<f64>, index: usize, width: usize) {
    out.extend((0..width).map(|k| if k == index { 1.0 } else { 0.0 }));
}

/// Index of the largest value; ties go to the lowest index.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = k;
        }
    }
    best
}
