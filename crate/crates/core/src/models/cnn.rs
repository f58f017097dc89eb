use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{init_uniform, output_gradient, Activation, Input, Network, Parameters, Sample};
use crate::embeddings::EmbeddingTable;
use crate::error::{Error, Result};
use crate::lexicon::FeatureVector;
use crate::tensor::{affine, affine_backward, dot, sigmoid, Tensor};

pub const KERNEL_WIDTHS: [usize; 5] = [2, 3, 4, 5, 6];
/// Shorter sequences are zero-padded to the widest kernel.
pub const MIN_SEQUENCE_LEN: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CnnShape {
    pub embed_dim: usize,
    pub filters: usize,
    pub hidden: usize,
    pub lexicon_dim: usize,
    pub labels: usize,
}

impl CnnShape {
    /// Width of the pooled convolution output before the lexicon join.
    pub fn merged_dim(&self) -> usize {
        KERNEL_WIDTHS.len() * self.filters
    }
}

#[derive(Debug, Clone, PartialEq)]
struct ConvBranch {
    width: usize,
    /// `[filters, width, embed_dim]`
    weight: Tensor,
    bias: Tensor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CnnModel {
    shape: CnnShape,
    convs: Vec<ConvBranch>,
    hidden_w: Tensor,
    hidden_b: Tensor,
    out_w: Tensor,
    out_b: Tensor,
}

struct Cache {
    x: Vec<f64>,
    // per branch, per filter: (best position, best pre-activation)
    pools: Vec<Vec<(usize, f64)>>,
    merged: Vec<f64>,
    hidden_pre: Vec<f64>,
    hidden: Vec<f64>,
    scores: Vec<f64>,
}

impl CnnModel {
    pub fn init<R: Rng + ?Sized>(shape: CnnShape, rng: &mut R) -> Self {
        let convs = KERNEL_WIDTHS
            .iter()
            .map(|&width| {
                let fan_in = width * shape.embed_dim;
                ConvBranch {
                    width,
                    weight: init_uniform(&[shape.filters, width, shape.embed_dim], fan_in, rng),
                    bias: init_uniform(&[shape.filters], fan_in, rng),
                }
            })
            .collect();
        let joined = shape.merged_dim() + shape.lexicon_dim;
        let hidden_w = init_uniform(&[joined, shape.hidden], joined, rng);
        let hidden_b = init_uniform(&[shape.hidden], joined, rng);
        let out_w = init_uniform(&[shape.hidden, shape.labels], shape.hidden, rng);
        let out_b = init_uniform(&[shape.labels], shape.hidden, rng);
        Self {
            shape,
            convs,
            hidden_w,
            hidden_b,
            out_w,
            out_b,
        }
    }

    pub fn shape(&self) -> CnnShape {
        self.shape
    }

    fn padded(&self, input: &Input) -> Result<(Vec<f64>, usize)> {
        let Input::Sequence {
            embedded,
            len,
            features,
        } = input
        else {
            return Err(Error::Config("the CNN takes embedded token sequences".into()));
        };
        let d = self.shape.embed_dim;
        if embedded.len() != len * d {
            return Err(Error::dims("embedded sequence", len * d, embedded.len()));
        }
        if features.len() != self.shape.lexicon_dim {
            return Err(Error::dims("lexicon features", self.shape.lexicon_dim, features.len()));
        }
        let n = (*len).max(MIN_SEQUENCE_LEN);
        let mut x = embedded.clone();
        x.resize(n * d, 0.0);
        Ok((x, n))
    }

    fn forward(&self, input: &Input) -> Result<Cache> {
        let (x, n) = self.padded(input)?;
        let d = self.shape.embed_dim;
        let mut pools = Vec::with_capacity(self.convs.len());
        let mut merged = Vec::with_capacity(self.shape.merged_dim() + self.shape.lexicon_dim);
        for conv in &self.convs {
            let span = conv.width * d;
            let positions = n - conv.width + 1;
            let mut pool = Vec::with_capacity(self.shape.filters);
            for f in 0..self.shape.filters {
                let kernel = &conv.weight.data()[f * span..(f + 1) * span];
                let b = conv.bias.data()[f];
                let mut best = (0, f64::NEG_INFINITY);
                for t in 0..positions {
                    let c = b + dot(kernel, &x[t * d..t * d + span]);
                    if c > best.1 {
                        best = (t, c);
                    }
                }
                // max over time of ReLU(c) = ReLU(max over time of c)
                merged.push(best.1.max(0.0));
                pool.push(best);
            }
            pools.push(pool);
        }
        merged.extend_from_slice(input.features());
        let hidden_pre = affine(&merged, &self.hidden_w, &self.hidden_b);
        let hidden: Vec<f64> = hidden_pre.iter().map(|&v| v.max(0.0)).collect();
        let scores = affine(&hidden, &self.out_w, &self.out_b)
            .into_iter()
            .map(sigmoid)
            .collect();
        Ok(Cache {
            x,
            pools,
            merged,
            hidden_pre,
            hidden,
            scores,
        })
    }
}

impl Parameters for CnnModel {
    fn named_tensors(&self) -> Vec<(String, &Tensor)> {
        let mut out = Vec::with_capacity(2 * self.convs.len() + 4);
        for conv in &self.convs {
            out.push((format!("conv{}.weight", conv.width), &conv.weight));
            out.push((format!("conv{}.bias", conv.width), &conv.bias));
        }
        out.push(("hidden.weight".into(), &self.hidden_w));
        out.push(("hidden.bias".into(), &self.hidden_b));
        out.push(("output.weight".into(), &self.out_w));
        out.push(("output.bias".into(), &self.out_b));
        out
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out = Vec::with_capacity(2 * self.convs.len() + 4);
        for conv in &mut self.convs {
            out.push(&mut conv.weight);
            out.push(&mut conv.bias);
        }
        out.push(&mut self.hidden_w);
        out.push(&mut self.hidden_b);
        out.push(&mut self.out_w);
        out.push(&mut self.out_b);
        out
    }
}

impl Network for CnnModel {
    fn activation(&self) -> Activation {
        Activation::Sigmoid
    }

    fn label_count(&self) -> usize {
        self.shape.labels
    }

    fn scores(&self, input: &Input) -> Result<Vec<f64>> {
        Ok(self.forward(input)?.scores)
    }

    fn accumulate(&self, sample: &Sample, scale: f64, grads: &mut Self) -> Result<f64> {
        if sample.gold.len() != self.shape.labels {
            return Err(Error::dims("gold labels", self.shape.labels, sample.gold.len()));
        }
        let cache = self.forward(&sample.input)?;
        let loss = super::bce_loss(&cache.scores, &sample.gold)?;
        let labels = self.shape.labels;

        let g_out: Vec<f64> = cache
            .scores
            .iter()
            .zip(&sample.gold)
            .map(|(&s, &y)| scale * output_gradient(Activation::Sigmoid, s, y, labels))
            .collect();
        let mut g_hidden = vec![0.0; self.shape.hidden];
        affine_backward(&cache.hidden, &self.out_w, &g_out, &mut grads.out_w, &mut grads.out_b, Some(&mut g_hidden));
        for (g, &pre) in g_hidden.iter_mut().zip(&cache.hidden_pre) {
            if pre <= 0.0 {
                *g = 0.0;
            }
        }
        let mut g_merged = vec![0.0; cache.merged.len()];
        affine_backward(
            &cache.merged,
            &self.hidden_w,
            &g_hidden,
            &mut grads.hidden_w,
            &mut grads.hidden_b,
            Some(&mut g_merged),
        );

        let d = self.shape.embed_dim;
        let filters = self.shape.filters;
        for (b, (conv, pool)) in self.convs.iter().zip(&cache.pools).enumerate() {
            let span = conv.width * d;
            let grad_conv = &mut grads.convs[b];
            for (f, &(t, pre)) in pool.iter().enumerate() {
                if pre <= 0.0 {
                    continue;
                }
                let g = g_merged[b * filters + f];
                grad_conv.bias.data_mut()[f] += g;
                let window = &cache.x[t * d..t * d + span];
                let gk = &mut grad_conv.weight.data_mut()[f * span..(f + 1) * span];
                for (gw, &xv) in gk.iter_mut().zip(window) {
                    *gw += g * xv;
                }
            }
        }
        Ok(loss)
    }

    fn branch_signature(&self, input: &Input) -> Result<Vec<u32>> {
        let cache = self.forward(input)?;
        let mut sig = Vec::new();
        for pool in &cache.pools {
            for &(t, pre) in pool {
                sig.push(t as u32);
                sig.push(u32::from(pre > 0.0));
            }
        }
        sig.extend(cache.hidden_pre.iter().map(|&v| u32::from(v > 0.0)));
        sig.extend(cache.scores.iter().map(|&s| u32::from(super::loss::clamped(s))));
        Ok(sig)
    }
}

/// Embeds `tokens` and scores them with the CNN.
pub fn forward_cnn<S: AsRef<str>>(
    tokens: &[S],
    embeddings: &EmbeddingTable,
    features: &FeatureVector,
    model: &CnnModel,
) -> Result<Vec<f64>> {
    if embeddings.dim() != model.shape.embed_dim {
        return Err(Error::dims("embedding table", model.shape.embed_dim, embeddings.dim()));
    }
    model.scores(&Input::Sequence {
        embedded: embeddings.embed(tokens),
        len: tokens.len(),
        features: features.values.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn shape() -> CnnShape {
        CnnShape {
            embed_dim: 50,
            filters: 64,
            hidden: 128,
            lexicon_dim: 4,
            labels: 11,
        }
    }

    #[test]
    fn merged_width_is_five_times_filters() {
        let m = CnnModel::init(shape(), &mut rand_chacha::ChaCha8Rng::seed_from_u64(3));
        let input = Input::Sequence {
            embedded: vec![0.1; 20 * 50],
            len: 20,
            features: vec![0.0; 4],
        };
        let cache = m.forward(&input).unwrap();
        assert_eq!(shape().merged_dim(), 320);
        assert_eq!(cache.merged.len(), 320 + 4);
        assert_eq!(cache.scores.len(), 11);
    }

    #[test]
    fn zero_params_give_sigmoid_of_bias() {
        let mut m = CnnModel::init(shape(), &mut rand_chacha::ChaCha8Rng::seed_from_u64(3));
        for t in m.tensors_mut() {
            t.fill(0.0);
        }
        m.out_b.data_mut()[2] = 1.5;
        let input = Input::Sequence {
            embedded: vec![0.0; 3 * 50],
            len: 3,
            features: vec![0.0; 4],
        };
        let scores = m.scores(&input).unwrap();
        assert_eq!(scores[0], 0.5);
        assert_eq!(scores[2], sigmoid(1.5));
    }

    #[test]
    fn empty_sequence_is_padded() {
        let m = CnnModel::init(shape(), &mut rand_chacha::ChaCha8Rng::seed_from_u64(4));
        let input = Input::Sequence {
            embedded: vec![],
            len: 0,
            features: vec![0.0; 4],
        };
        assert_eq!(m.scores(&input).unwrap().len(), 11);
    }

    #[test]
    fn mismatched_embedding_width_is_an_error() {
        let m = CnnModel::init(shape(), &mut rand_chacha::ChaCha8Rng::seed_from_u64(4));
        let input = Input::Sequence {
            embedded: vec![0.0; 7],
            len: 2,
            features: vec![0.0; 4],
        };
        assert!(m.scores(&input).is_err());
    }
}
