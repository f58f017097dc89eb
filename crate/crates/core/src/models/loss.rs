use crate::error::{Error, Result};

/// Probabilities are clamped into `[P_MIN, 1 - P_MIN]` before taking logs.
pub const P_MIN: f64 = 1e-12;

/// Mean binary cross-entropy over labels.
///
/// `probs` must already be probabilities; map tanh activations with
/// `(a + 1) / 2` first.
pub fn bce_loss(probs: &[f64], gold: &[bool]) -> Result<f64> {
    if probs.len() != gold.len() {
        return Err(Error::dims("bce_loss", gold.len(), probs.len()));
    }
    if probs.is_empty() {
        return Err(Error::EmptyInput("bce_loss over zero labels".into()));
    }
    let total: f64 = probs
        .iter()
        .zip(gold)
        .map(|(&p, &y)| {
            let p = p.clamp(P_MIN, 1.0 - P_MIN);
            if y {
                -libm::log(p)
            } else {
                -libm::log(1.0 - p)
            }
        })
        .sum();
    Ok(total / probs.len() as f64)
}

/// True when the clamp is active, i.e. the loss is locally flat in `p`.
pub(crate) fn clamped(p: f64) -> bool {
    !(P_MIN..=1.0 - P_MIN).contains(&p)
}
