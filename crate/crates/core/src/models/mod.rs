//! Multi-label emotion classifiers trained from scratch.
//!
//! Three networks share one interface ([`Network`]):
//!
//! * [`CnnModel`]: five parallel 1-D convolutions (widths 2 to 6) with ReLU and
//!   max-pooling over time, merged, joined with lexicon features, then a
//!   128-unit ReLU layer and sigmoid outputs.
//! * [`LstmModel`]: one unidirectional LSTM layer (256 units); the last hidden
//!   state is joined with lexicon features and fed through the same
//!   128-unit layer and sigmoid outputs.
//! * [`HeadModel`]: a single fully connected layer over a precomputed
//!   sentence vector joined with lexicon features, with tanh outputs.
//!
//! All three are trained with mean binary cross-entropy. Tanh activations
//! `a` enter the loss as `p = (a + 1) / 2`, while prediction thresholds the
//! raw activation at 0.33. Sigmoid outputs are thresholded at 0.5. Both
//! comparisons are strict.

mod adamw;
mod checkpoint;
mod cnn;
mod head;
mod loss;
mod lstm;
mod train;

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use adamw::{adamw_step, AdamWConfig, AdamWState};
pub use checkpoint::{Checkpoint, Manifest, ModelShape, TensorEntry, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use cnn::{forward_cnn, CnnModel, CnnShape, KERNEL_WIDTHS, MIN_SEQUENCE_LEN};
pub use head::{forward_head, HeadModel, HeadShape};
pub use loss::{bce_loss, P_MIN};
pub use lstm::{forward_lstm, LstmModel, LstmShape};
pub use train::{init_model, train, Architecture, TrainConfig, TrainOutcome};

use crate::error::{Error, Result};
use crate::labels::{LabelVector, Taxonomy};
use crate::tensor::Tensor;

/// Tanh activations above this value mark a label as present.
pub const HEAD_THRESHOLD: f64 = 0.33;
/// Sigmoid scores above this value mark a label as present.
pub const SIGMOID_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Cnn,
    Lstm,
    Head,
}

impl ModelKind {
    pub fn default_learning_rate(self) -> f64 {
        match self {
            ModelKind::Head => 2e-5,
            ModelKind::Cnn | ModelKind::Lstm => 1e-3,
        }
    }

    pub fn activation(self) -> Activation {
        match self {
            ModelKind::Head => Activation::Tanh,
            ModelKind::Cnn | ModelKind::Lstm => Activation::Sigmoid,
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "cnn" => Ok(ModelKind::Cnn),
            "lstm" => Ok(ModelKind::Lstm),
            "head" => Ok(ModelKind::Head),
            other => Err(Error::Config(format!("unknown model kind {other:?}"))),
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Cnn => "cnn",
            ModelKind::Lstm => "lstm",
            ModelKind::Head => "head",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Sigmoid,
    Tanh,
}

impl Activation {
    pub fn threshold(self) -> f64 {
        match self {
            Activation::Sigmoid => SIGMOID_THRESHOLD,
            Activation::Tanh => HEAD_THRESHOLD,
        }
    }

    /// Maps an output score into `(0, 1)` for the loss.
    pub fn probability(self, score: f64) -> f64 {
        match self {
            Activation::Sigmoid => score,
            Activation::Tanh => (score + 1.0) / 2.0,
        }
    }

    pub fn decide(self, scores: &[f64]) -> Vec<bool> {
        let t = self.threshold();
        scores.iter().map(|&s| s > t).collect()
    }
}

/// One classifier input. Token models see an embedded sequence, the head
/// sees a sentence vector; both get the lexicon feature vector.
#[derive(Debug, Clone, PartialEq)]
pub enum Input {
    Sequence {
        /// Row-major `len × embed_dim`.
        embedded: Vec<f64>,
        len: usize,
        features: Vec<f64>,
    },
    Sentence {
        vector: Vec<f64>,
        features: Vec<f64>,
    },
}

impl Input {
    pub fn features(&self) -> &[f64] {
        match self {
            Input::Sequence { features, .. } | Input::Sentence { features, .. } => features,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub input: Input,
    pub gold: Vec<bool>,
}

/// Named access to every trainable tensor, in a fixed order.
pub trait Parameters {
    fn named_tensors(&self) -> Vec<(String, &Tensor)>;
    fn tensors_mut(&mut self) -> Vec<&mut Tensor>;

    fn tensors(&self) -> Vec<&Tensor> {
        self.named_tensors().into_iter().map(|(_, t)| t).collect()
    }

    fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }
}

pub trait Network: Parameters + Clone + Send + Sync {
    fn activation(&self) -> Activation;

    fn label_count(&self) -> usize;

    /// Output scores: sigmoid probabilities or tanh activations.
    fn scores(&self, input: &Input) -> Result<Vec<f64>>;

    /// Adds `scale · ∂loss/∂θ` for one sample into `grads` and returns the
    /// sample's loss.
    fn accumulate(&self, sample: &Sample, scale: f64, grads: &mut Self) -> Result<f64>;

    /// Identifies which linear piece of every ReLU, max-pool and hinge the
    /// forward pass used. Finite differences are only meaningful when the
    /// signature is the same at both stencil points.
    fn branch_signature(&self, input: &Input) -> Result<Vec<u32>>;

    fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        for t in z.tensors_mut() {
            t.fill(0.0);
        }
        z
    }

    fn loss(&self, sample: &Sample) -> Result<f64> {
        let scores = self.scores(&sample.input)?;
        let act = self.activation();
        let probs: Vec<f64> = scores.iter().map(|&s| act.probability(s)).collect();
        bce_loss(&probs, &sample.gold)
    }

    fn predict(&self, input: &Input) -> Result<Vec<bool>> {
        Ok(self.activation().decide(&self.scores(input)?))
    }
}

/// Mean loss over a batch.
pub fn batch_loss<N: Network>(net: &N, batch: &[&Sample]) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::EmptyInput("empty batch".into()));
    }
    let mut total = 0.0;
    for s in batch {
        total += net.loss(s)?;
    }
    Ok(total / batch.len() as f64)
}

/// Exact gradient of the mean batch loss.
pub fn backward<N: Network>(net: &N, batch: &[&Sample]) -> Result<(f64, N)> {
    if batch.is_empty() {
        return Err(Error::EmptyInput("empty batch".into()));
    }
    let scale = 1.0 / batch.len() as f64;
    let mut grads = net.zeros_like();
    let mut total = 0.0;
    for s in batch {
        total += net.accumulate(s, scale, &mut grads)?;
    }
    Ok((total * scale, grads))
}

/// `∂loss/∂score` for one output, already divided by the label count.
pub(crate) fn output_gradient(act: Activation, score: f64, gold: bool, labels: usize) -> f64 {
    let p = act.probability(score);
    if loss::clamped(p) {
        return 0.0;
    }
    let y = if gold { 1.0 } else { 0.0 };
    let g = match act {
        // d/dz of BCE(sigmoid(z))
        Activation::Sigmoid => p - y,
        // a = tanh(z), p = (a+1)/2: dL/dp · dp/da · da/dz = 2 (p − y)
        Activation::Tanh => 2.0 * (p - y),
    };
    g / labels as f64
}

/// Uniform `±sqrt(1 / fan_in)` initialisation.
pub(crate) fn init_uniform<R: Rng + ?Sized>(shape: &[usize], fan_in: usize, rng: &mut R) -> Tensor {
    Tensor::uniform(shape, (1.0 / fan_in.max(1) as f64).sqrt(), rng)
}

/// A classifier of any of the three kinds.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Cnn(CnnModel),
    Lstm(LstmModel),
    Head(HeadModel),
}

macro_rules! dispatch {
    ($self:expr, $m:ident => $body:expr) => {
        match $self {
            Model::Cnn($m) => $body,
            Model::Lstm($m) => $body,
            Model::Head($m) => $body,
        }
    };
}

impl Model {
    pub fn kind(&self) -> ModelKind {
        match self {
            Model::Cnn(_) => ModelKind::Cnn,
            Model::Lstm(_) => ModelKind::Lstm,
            Model::Head(_) => ModelKind::Head,
        }
    }

    pub fn scores(&self, input: &Input) -> Result<Vec<f64>> {
        dispatch!(self, m => m.scores(input))
    }

    pub fn predict(&self, input: &Input) -> Result<Vec<bool>> {
        dispatch!(self, m => m.predict(input))
    }

    pub fn predict_labels(&self, input: &Input, taxonomy: &Arc<Taxonomy>) -> Result<LabelVector> {
        LabelVector::new(taxonomy.clone(), self.predict(input)?)
    }

    pub fn activation(&self) -> Activation {
        self.kind().activation()
    }

    pub fn label_count(&self) -> usize {
        dispatch!(self, m => m.label_count())
    }

    pub fn named_tensors(&self) -> Vec<(String, &Tensor)> {
        dispatch!(self, m => m.named_tensors())
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        dispatch!(self, m => m.tensors_mut())
    }

    pub fn batch_loss(&self, batch: &[&Sample]) -> Result<f64> {
        dispatch!(self, m => batch_loss(m, batch))
    }
}
