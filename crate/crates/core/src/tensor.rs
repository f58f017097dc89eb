use rand::Rng;

use crate::error::{Error, Result};

/// Dense row-major `f64` array.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        Self {
            shape: shape.to_vec(),
            data: vec![0.0; shape.iter().product()],
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if data.len() != expected {
            return Err(Error::dims("tensor data", expected, data.len()));
        }
        Ok(Self {
            shape: shape.to_vec(),
            data,
        })
    }

    /// Entries drawn uniformly from `[-bound, bound)`.
    pub fn uniform<R: Rng + ?Sized>(shape: &[usize], bound: f64, rng: &mut R) -> Self {
        let n = shape.iter().product();
        let data = (0..n).map(|_| rng.gen_range(-bound..bound)).collect();
        Self {
            shape: shape.to_vec(),
            data,
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn fill(&mut self, value: f64) {
        self.data.iter_mut().for_each(|v| *v = value);
    }

    pub fn check_shape(&self, expected: &[usize], context: &str) -> Result<()> {
        if self.shape != expected {
            return Err(Error::ShapeMismatch {
                context: context.to_string(),
                expected: expected.to_vec(),
                found: self.shape.clone(),
            });
        }
        Ok(())
    }
}

/// `b + x·W` with `W` stored as `[in, out]`.
pub(crate) fn affine(x: &[f64], w: &Tensor, b: &Tensor) -> Vec<f64> {
    let n_out = w.shape[1];
    debug_assert_eq!(x.len(), w.shape[0]);
    let mut y = b.data.clone();
    for (i, &xi) in x.iter().enumerate() {
        if xi == 0.0 {
            continue;
        }
        let row = &w.data[i * n_out..(i + 1) * n_out];
        for (yj, wij) in y.iter_mut().zip(row) {
            *yj += xi * wij;
        }
    }
    y
}

/// Accumulates the gradients of [`affine`] given the upstream gradient `gy`.
pub(crate) fn affine_backward(
    x: &[f64],
    w: &Tensor,
    gy: &[f64],
    gw: &mut Tensor,
    gb: &mut Tensor,
    gx: Option<&mut [f64]>,
) {
    let n_out = w.shape[1];
    for (i, &xi) in x.iter().enumerate() {
        if xi == 0.0 {
            continue;
        }
        let row = &mut gw.data[i * n_out..(i + 1) * n_out];
        for (g, &gyj) in row.iter_mut().zip(gy) {
            *g += xi * gyj;
        }
    }
    for (g, &gyj) in gb.data.iter_mut().zip(gy) {
        *g += gyj;
    }
    if let Some(gx) = gx {
        for (i, gxi) in gx.iter_mut().enumerate() {
            let row = &w.data[i * n_out..(i + 1) * n_out];
            *gxi += dot(row, gy);
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

pub(crate) fn tanh(x: f64) -> f64 {
    libm::tanh(x)
}

/// Numerically stable softmax.
pub(crate) fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| libm::exp(l - max)).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affine_matches_manual() {
        let w = Tensor::from_vec(&[2, 3], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let b = Tensor::from_vec(&[3], vec![0.5, 0.0, -0.5]).unwrap();
        assert_eq!(affine(&[1.0, -1.0], &w, &b), vec![-2.5, -3.0, -3.5]);
    }

    #[test]
    fn sigmoid_is_symmetric_and_bounded() {
        for x in [-800.0, -3.0, 0.0, 2.5, 800.0] {
            let s = sigmoid(x);
            assert!((0.0..=1.0).contains(&s));
            assert!((s + sigmoid(-x) - 1.0).abs() < 1e-15);
        }
        assert_eq!(sigmoid(0.0), 0.5);
    }

    #[test]
    fn softmax_sums_to_one() {
        let p = softmax(&[1000.0, 1000.0, -5.0]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!((p[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn from_vec_checks_length() {
        assert!(Tensor::from_vec(&[2, 2], vec![0.0; 3]).is_err());
    }
}
