//! AdamW with decoupled weight decay.
//!
//! The update is
//! `θ ← θ − lr · (m̂ / (√v̂ + ε) + wd · θ)`
//! with bias-corrected first and second moments `m̂`, `v̂`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamWConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub weight_decay: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            weight_decay: 0.01,
        }
    }
}

/// Moment estimates, one pair of tensors per parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamWState {
    pub step: u64,
    pub m: Vec<Tensor>,
    pub v: Vec<Tensor>,
}

impl AdamWState {
    pub fn new<'a>(params: impl IntoIterator<Item = &'a Tensor>) -> Self {
        let m: Vec<Tensor> = params.into_iter().map(|p| Tensor::zeros(p.shape())).collect();
        let v = m.clone();
        Self { step: 0, m, v }
    }
}

pub fn adamw_step(
    params: &mut [&mut Tensor],
    grads: &[&Tensor],
    state: &mut AdamWState,
    config: &AdamWConfig,
) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.m.len() || params.len() != state.v.len() {
        return Err(Error::dims("adamw tensor count", params.len(), grads.len().min(state.m.len())));
    }
    for ((p, g), m) in params.iter().zip(grads).zip(&state.m) {
        g.check_shape(p.shape(), "adamw gradient")?;
        m.check_shape(p.shape(), "adamw state")?;
    }

    state.step += 1;
    let t = state.step as f64;
    let AdamWConfig {
        learning_rate: lr,
        beta1,
        beta2,
        epsilon,
        weight_decay,
    } = *config;
    let bc1 = 1.0 - libm::pow(beta1, t);
    let bc2 = 1.0 - libm::pow(beta2, t);

    for (((p, g), m), v) in params
        .iter_mut()
        .zip(grads)
        .zip(state.m.iter_mut())
        .zip(state.v.iter_mut())
    {
        let p = p.data_mut();
        for (((theta, &grad), m), v) in p
            .iter_mut()
            .zip(g.data())
            .zip(m.data_mut())
            .zip(v.data_mut())
        {
            *m = beta1 * *m + (1.0 - beta1) * grad;
            *v = beta2 * *v + (1.0 - beta2) * grad * grad;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *theta -= lr * (m_hat / (v_hat.sqrt() + epsilon) + weight_decay * *theta);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(v: f64) -> Tensor {
        Tensor::from_vec(&[1], vec![v]).unwrap()
    }

    #[test]
    fn zero_gradient_without_decay_is_a_no_op() {
        let mut p = Tensor::from_vec(&[3], vec![0.5, -1.0, 2.0]).unwrap();
        let before = p.clone();
        let g = Tensor::zeros(&[3]);
        let mut state = AdamWState::new([&p]);
        let cfg = AdamWConfig {
            weight_decay: 0.0,
            ..Default::default()
        };
        for _ in 0..5 {
            adamw_step(&mut [&mut p], &[&g], &mut state, &cfg).unwrap();
        }
        assert_eq!(p, before);
    }

    #[test]
    fn single_scalar_step_matches_hand_computation() {
        // θ0 = 1, g = 1, lr = 0.1, wd = 0.01:
        // m = 0.1, v = 0.001, m̂ = v̂ = 1,
        // θ1 = 1 − 0.1 · (1 / (1 + 1e-8) + 0.01) = 0.899000001 (to 1e-15).
        let mut p = scalar(1.0);
        let g = scalar(1.0);
        let mut state = AdamWState::new([&p]);
        let cfg = AdamWConfig {
            learning_rate: 0.1,
            ..Default::default()
        };
        adamw_step(&mut [&mut p], &[&g], &mut state, &cfg).unwrap();
        assert!((p.data()[0] - 0.899000001).abs() < 1e-15, "{}", p.data()[0]);
        assert!((state.m[0].data()[0] - 0.1).abs() < 1e-16);
        assert!((state.v[0].data()[0] - 0.001).abs() < 1e-18);
        assert_eq!(state.step, 1);
    }

    #[test]
    fn decay_alone_shrinks_magnitude() {
        let mut p = Tensor::from_vec(&[2], vec![3.0, -2.0]).unwrap();
        let g = Tensor::zeros(&[2]);
        let mut state = AdamWState::new([&p]);
        let cfg = AdamWConfig::default();
        let mut prev: Vec<f64> = p.data().iter().map(|v| v.abs()).collect();
        for _ in 0..10 {
            adamw_step(&mut [&mut p], &[&g], &mut state, &cfg).unwrap();
            let now: Vec<f64> = p.data().iter().map(|v| v.abs()).collect();
            assert!(now.iter().zip(&prev).all(|(a, b)| a < b));
            prev = now;
        }
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let mut p = Tensor::zeros(&[2]);
        let g = Tensor::zeros(&[3]);
        let mut state = AdamWState::new([&Tensor::zeros(&[2])]);
        assert!(adamw_step(&mut [&mut p], &[&g], &mut state, &AdamWConfig::default()).is_err());
    }
}
