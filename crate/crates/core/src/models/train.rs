use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    adamw_step, backward, batch_loss, AdamWConfig, AdamWState, CnnModel, CnnShape, HeadModel, HeadShape, Input,
    LstmModel, LstmShape, Model, ModelKind, Network, Sample,
};
use crate::error::{Error, Result};

/// Layer widths that are not implied by the data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Architecture {
    pub cnn_filters: usize,
    pub lstm_hidden: usize,
    pub dense_hidden: usize,
}

impl Default for Architecture {
    fn default() -> Self {
        Self {
            cnn_filters: 64,
            lstm_hidden: 256,
            dense_hidden: 128,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    /// `None` picks the per-model default (2e-5 for the head, 1e-3 otherwise).
    pub learning_rate: Option<f64>,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub architecture: Architecture,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 5,
            learning_rate: None,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            weight_decay: 0.01,
            batch_size: 32,
            seed: 42,
            architecture: Architecture::default(),
        }
    }
}

impl TrainConfig {
    pub fn optimizer(&self, kind: ModelKind) -> AdamWConfig {
        AdamWConfig {
            learning_rate: self.learning_rate.unwrap_or_else(|| kind.default_learning_rate()),
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
            weight_decay: self.weight_decay,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("beta1", self.beta1),
            ("beta2", self.beta2),
            ("epsilon", self.epsilon),
            ("learning_rate", self.learning_rate.unwrap_or(1.0)),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.beta1 >= 1.0 || self.beta2 >= 1.0 {
            return Err(Error::Config("beta1 and beta2 must be below 1".into()));
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return Err(Error::Config("weight_decay must be non-negative".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        let a = self.architecture;
        if a.cnn_filters == 0 || a.lstm_hidden == 0 || a.dense_hidden == 0 {
            return Err(Error::Config("layer widths must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: Model,
    pub optimizer: AdamWState,
    /// Full-dataset mean loss before the first update.
    pub initial_loss: f64,
    /// Full-dataset mean loss after each epoch.
    pub epoch_losses: Vec<f64>,
}

struct Dims {
    seq_dim: Option<usize>,
    sentence_dim: Option<usize>,
    lexicon_dim: usize,
    labels: usize,
}

fn inspect(kind: ModelKind, dataset: &[Sample]) -> Result<Dims> {
    let first = dataset
        .first()
        .ok_or_else(|| Error::EmptyInput("training set is empty".into()))?;
    let labels = first.gold.len();
    if labels == 0 {
        return Err(Error::EmptyInput("samples carry no labels".into()));
    }
    let lexicon_dim = first.input.features().len();
    let mut dims = Dims {
        seq_dim: None,
        sentence_dim: None,
        lexicon_dim,
        labels,
    };
    for (i, s) in dataset.iter().enumerate() {
        if s.gold.len() != labels {
            return Err(Error::dims(format!("labels of sample {i}"), labels, s.gold.len()));
        }
        if s.input.features().len() != lexicon_dim {
            return Err(Error::dims(format!("features of sample {i}"), lexicon_dim, s.input.features().len()));
        }
        match (&s.input, kind) {
            (Input::Sentence { vector, .. }, ModelKind::Head) => {
                let d = *dims.sentence_dim.get_or_insert(vector.len());
                if vector.len() != d {
                    return Err(Error::dims(format!("sentence vector of sample {i}"), d, vector.len()));
                }
            }
            (Input::Sequence { embedded, len, .. }, ModelKind::Cnn | ModelKind::Lstm) => {
                if *len > 0 {
                    let d = embedded.len() / len;
                    let expected = *dims.seq_dim.get_or_insert(d);
                    if d != expected || embedded.len() != len * expected {
                        return Err(Error::dims(format!("embeddings of sample {i}"), expected, d));
                    }
                }
            }
            _ => {
                return Err(Error::Config(format!(
                    "sample {i} does not match the input type of a {kind} model"
                )))
            }
        }
    }
    if matches!(kind, ModelKind::Cnn | ModelKind::Lstm) && dims.seq_dim.is_none() {
        return Err(Error::EmptyInput("every training sequence is empty".into()));
    }
    Ok(dims)
}

/// Freshly initialised model sized for `dataset`.
pub fn init_model(kind: ModelKind, dataset: &[Sample], config: &TrainConfig, rng: &mut ChaCha8Rng) -> Result<Model> {
    let dims = inspect(kind, dataset)?;
    let arch = config.architecture;
    Ok(match kind {
        ModelKind::Head => Model::Head(HeadModel::init(
            HeadShape {
                sentence_dim: dims.sentence_dim.unwrap_or(0),
                lexicon_dim: dims.lexicon_dim,
                labels: dims.labels,
            },
            rng,
        )),
        ModelKind::Cnn => Model::Cnn(CnnModel::init(
            CnnShape {
                embed_dim: dims.seq_dim.unwrap_or(0),
                filters: arch.cnn_filters,
                hidden: arch.dense_hidden,
                lexicon_dim: dims.lexicon_dim,
                labels: dims.labels,
            },
            rng,
        )),
        ModelKind::Lstm => Model::Lstm(LstmModel::init(
            LstmShape {
                embed_dim: dims.seq_dim.unwrap_or(0),
                hidden: arch.lstm_hidden,
                dense: arch.dense_hidden,
                lexicon_dim: dims.lexicon_dim,
                labels: dims.labels,
            },
            rng,
        )),
    })
}

fn run<N: Network>(
    net: &mut N,
    dataset: &[Sample],
    config: &TrainConfig,
    optimizer: &AdamWConfig,
    rng: &mut ChaCha8Rng,
) -> Result<(AdamWState, f64, Vec<f64>)> {
    let all: Vec<&Sample> = dataset.iter().collect();
    let initial = batch_loss(net, &all)?;
    let mut state = AdamWState::new(net.tensors());
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut losses = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        order.shuffle(rng);
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<&Sample> = chunk.iter().map(|&i| &dataset[i]).collect();
            let (_, grads) = backward(net, &batch)?;
            let grad_refs = grads.tensors();
            adamw_step(&mut net.tensors_mut(), &grad_refs, &mut state, optimizer)?;
        }
        let loss = batch_loss(net, &all)?;
        if !loss.is_finite() {
            return Err(Error::Config(format!("training diverged at epoch {epoch}")));
        }
        log::info!("epoch {} loss {loss:.6}", epoch + 1);
        losses.push(loss);
    }
    Ok((state, initial, losses))
}

/// Trains a fresh model of `kind` on `dataset`.
///
/// One seeded ChaCha stream drives initialisation and then every epoch's
/// shuffle, so equal seeds give bit-identical results.
pub fn train(kind: ModelKind, dataset: &[Sample], config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let model = init_model(kind, dataset, config, &mut rng)?;
    continue_training(model, dataset, config, &mut rng)
}

fn continue_training(model: Model, dataset: &[Sample], config: &TrainConfig, rng: &mut ChaCha8Rng) -> Result<TrainOutcome> {
    let optimizer = config.optimizer(model.kind());
    let (model, (state, initial_loss, epoch_losses)) = match model {
        Model::Head(mut m) => {
            let r = run(&mut m, dataset, config, &optimizer, rng)?;
            (Model::Head(m), r)
        }
        Model::Cnn(mut m) => {
            let r = run(&mut m, dataset, config, &optimizer, rng)?;
            (Model::Cnn(m), r)
        }
        Model::Lstm(mut m) => {
            let r = run(&mut m, dataset, config, &optimizer, rng)?;
            (Model::Lstm(m), r)
        }
    };
    Ok(TrainOutcome {
        model,
        optimizer: state,
        initial_loss,
        epoch_losses,
    })
}
