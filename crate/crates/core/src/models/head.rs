use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{init_uniform, output_gradient, Activation, Input, Network, Parameters, Sample};
use crate::error::{Error, Result};
use crate::lexicon::FeatureVector;
use crate::tensor::{affine, affine_backward, tanh, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeadShape {
    pub sentence_dim: usize,
    pub lexicon_dim: usize,
    pub labels: usize,
}

impl HeadShape {
    /// Width of the concatenated input vector.
    pub fn input_dim(&self) -> usize {
        self.sentence_dim + self.lexicon_dim
    }
}

/// `a = tanh(W · [s; f] + b)` over a sentence vector `s` and lexicon
/// features `f`. `W` is stored `[input_dim, labels]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadModel {
    shape: HeadShape,
    pub weight: Tensor,
    pub bias: Tensor,
}

impl HeadModel {
    pub fn init<R: Rng + ?Sized>(shape: HeadShape, rng: &mut R) -> Self {
        let fan_in = shape.input_dim();
        let weight = init_uniform(&[fan_in, shape.labels], fan_in, rng);
        let bias = init_uniform(&[shape.labels], fan_in, rng);
        Self { shape, weight, bias }
    }

    pub fn zeros(shape: HeadShape) -> Self {
        Self {
            shape,
            weight: Tensor::zeros(&[shape.input_dim(), shape.labels]),
            bias: Tensor::zeros(&[shape.labels]),
        }
    }

    pub fn from_tensors(shape: HeadShape, weight: Tensor, bias: Tensor) -> Result<Self> {
        weight.check_shape(&[shape.input_dim(), shape.labels], "head weight")?;
        bias.check_shape(&[shape.labels], "head bias")?;
        Ok(Self { shape, weight, bias })
    }

    pub fn shape(&self) -> HeadShape {
        self.shape
    }

    fn concat(&self, input: &Input) -> Result<Vec<f64>> {
        let Input::Sentence { vector, features } = input else {
            return Err(Error::Config("the head model takes sentence-vector inputs".into()));
        };
        if vector.len() != self.shape.sentence_dim {
            return Err(Error::dims("sentence vector", self.shape.sentence_dim, vector.len()));
        }
        if features.len() != self.shape.lexicon_dim {
            return Err(Error::dims("lexicon features", self.shape.lexicon_dim, features.len()));
        }
        let mut x = Vec::with_capacity(self.shape.input_dim());
        x.extend_from_slice(vector);
        x.extend_from_slice(features);
        Ok(x)
    }

    /// Pre-activations `W · [s; f] + b`.
    pub fn logits(&self, input: &Input) -> Result<Vec<f64>> {
        Ok(affine(&self.concat(input)?, &self.weight, &self.bias))
    }
}

impl Parameters for HeadModel {
    fn named_tensors(&self) -> Vec<(String, &Tensor)> {
        vec![("head.weight".into(), &self.weight), ("head.bias".into(), &self.bias)]
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        vec![&mut self.weight, &mut self.bias]
    }
}

impl Network for HeadModel {
    fn activation(&self) -> Activation {
        Activation::Tanh
    }

    fn label_count(&self) -> usize {
        self.shape.labels
    }

    fn scores(&self, input: &Input) -> Result<Vec<f64>> {
        Ok(self.logits(input)?.into_iter().map(tanh).collect())
    }

    fn accumulate(&self, sample: &Sample, scale: f64, grads: &mut Self) -> Result<f64> {
        let x = self.concat(&sample.input)?;
        if sample.gold.len() != self.shape.labels {
            return Err(Error::dims("gold labels", self.shape.labels, sample.gold.len()));
        }
        let a: Vec<f64> = affine(&x, &self.weight, &self.bias).into_iter().map(tanh).collect();
        let probs: Vec<f64> = a.iter().map(|&v| Activation::Tanh.probability(v)).collect();
        let loss = super::bce_loss(&probs, &sample.gold)?;
        let gz: Vec<f64> = a
            .iter()
            .zip(&sample.gold)
            .map(|(&ai, &y)| scale * output_gradient(Activation::Tanh, ai, y, self.shape.labels))
            .collect();
        affine_backward(&x, &self.weight, &gz, &mut grads.weight, &mut grads.bias, None);
        Ok(loss)
    }

    fn branch_signature(&self, input: &Input) -> Result<Vec<u32>> {
        // Smooth everywhere except where the loss clamp engages.
        Ok(self
            .scores(input)?
            .iter()
            .map(|&a| u32::from(super::loss::clamped(Activation::Tanh.probability(a))))
            .collect())
    }
}

/// Head activations for one tweet.
pub fn forward_head(sentence: &[f64], features: &FeatureVector, model: &HeadModel) -> Result<Vec<f64>> {
    model.scores(&Input::Sentence {
        vector: sentence.to_vec(),
        features: features.values.clone(),
    })
}
