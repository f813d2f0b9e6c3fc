/// Probabilities are kept inside `[PROB_EPS, 1 - PROB_EPS]` before any log.
pub const PROB_EPS: f64 = 1e-7;

#[inline]
pub fn clamp_prob(x: f64) -> f64 {
    x.clamp(PROB_EPS, 1.0 - PROB_EPS)
}

/// Binary cross entropy `-y ln x - (1 - y) ln(1 - x)` on a clamped `x`.
#[inline]
pub fn bce(x: f64, y: f64) -> f64 {
    let x = clamp_prob(x);
    -y * x.ln() - (1.0 - y) * (1.0 - x).ln()
}

/// d bce / dx, evaluated at the clamped probability.
#[inline]
pub fn bce_grad(x: f64, y: f64) -> f64 {
    let x = clamp_prob(x);
    (x - y) / (x * (1.0 - x))
}
