use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{init_uniform, output_gradient, Activation, Input, Network, Parameters, Sample};
use crate::embeddings::EmbeddingTable;
use crate::error::{Error, Result};
use crate::lexicon::FeatureVector;
use crate::tensor::{affine, affine_backward, sigmoid, tanh, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LstmShape {
    pub embed_dim: usize,
    pub hidden: usize,
    pub dense: usize,
    pub lexicon_dim: usize,
    pub labels: usize,
}

/// Single-layer unidirectional LSTM classifier.
///
/// Gate pre-activations are `x·W_ih + h·W_hh + b`, laid out as
/// `[input | forget | cell | output]` blocks of `hidden` columns each.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmModel {
    shape: LstmShape,
    w_ih: Tensor,
    w_hh: Tensor,
    b: Tensor,
    dense_w: Tensor,
    dense_b: Tensor,
    out_w: Tensor,
    out_b: Tensor,
}

struct Step {
    x: Vec<f64>,
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    // activated gates, 4H
    gates: Vec<f64>,
    tanh_c: Vec<f64>,
}

struct Cache {
    steps: Vec<Step>,
    joined: Vec<f64>,
    dense_pre: Vec<f64>,
    dense: Vec<f64>,
    scores: Vec<f64>,
}

impl LstmModel {
    pub fn init<R: Rng + ?Sized>(shape: LstmShape, rng: &mut R) -> Self {
        let h = shape.hidden;
        let fan_in = shape.embed_dim + h;
        let w_ih = init_uniform(&[shape.embed_dim, 4 * h], fan_in, rng);
        let w_hh = init_uniform(&[h, 4 * h], fan_in, rng);
        let b = init_uniform(&[4 * h], fan_in, rng);
        let joined = h + shape.lexicon_dim;
        let dense_w = init_uniform(&[joined, shape.dense], joined, rng);
        let dense_b = init_uniform(&[shape.dense], joined, rng);
        let out_w = init_uniform(&[shape.dense, shape.labels], shape.dense, rng);
        let out_b = init_uniform(&[shape.labels], shape.dense, rng);
        Self {
            shape,
            w_ih,
            w_hh,
            b,
            dense_w,
            dense_b,
            out_w,
            out_b,
        }
    }

    pub fn shape(&self) -> LstmShape {
        self.shape
    }

    fn forward(&self, input: &Input) -> Result<Cache> {
        let Input::Sequence {
            embedded,
            len,
            features,
        } = input
        else {
            return Err(Error::Config("the LSTM takes embedded token sequences".into()));
        };
        let d = self.shape.embed_dim;
        let hsz = self.shape.hidden;
        if embedded.len() != len * d {
            return Err(Error::dims("embedded sequence", len * d, embedded.len()));
        }
        if features.len() != self.shape.lexicon_dim {
            return Err(Error::dims("lexicon features", self.shape.lexicon_dim, features.len()));
        }
        // An empty tweet is read as one all-zero token.
        let zero_token = vec![0.0; d];
        let rows: Vec<&[f64]> = if *len == 0 {
            vec![&zero_token]
        } else {
            embedded.chunks_exact(d).collect()
        };

        let mut h = vec![0.0; hsz];
        let mut c = vec![0.0; hsz];
        let mut steps = Vec::with_capacity(rows.len());
        for x in rows {
            let mut z = affine(x, &self.w_ih, &self.b);
            let zh = affine(&h, &self.w_hh, &Tensor::zeros(&[4 * hsz]));
            for (a, b) in z.iter_mut().zip(zh) {
                *a += b;
            }
            let mut gates = z;
            for (k, g) in gates.iter_mut().enumerate() {
                *g = if (2 * hsz..3 * hsz).contains(&k) { tanh(*g) } else { sigmoid(*g) };
            }
            let mut c_new = vec![0.0; hsz];
            let mut tanh_c = vec![0.0; hsz];
            let mut h_new = vec![0.0; hsz];
            for j in 0..hsz {
                let (i, f, g, o) = (gates[j], gates[hsz + j], gates[2 * hsz + j], gates[3 * hsz + j]);
                c_new[j] = f * c[j] + i * g;
                tanh_c[j] = tanh(c_new[j]);
                h_new[j] = o * tanh_c[j];
            }
            steps.push(Step {
                x: x.to_vec(),
                h_prev: std::mem::replace(&mut h, h_new),
                c_prev: std::mem::replace(&mut c, c_new),
                gates,
                tanh_c,
            });
        }

        let mut joined = h;
        joined.extend_from_slice(features);
        let dense_pre = affine(&joined, &self.dense_w, &self.dense_b);
        let dense: Vec<f64> = dense_pre.iter().map(|&v| v.max(0.0)).collect();
        let scores = affine(&dense, &self.out_w, &self.out_b)
            .into_iter()
            .map(sigmoid)
            .collect();
        Ok(Cache {
            steps,
            joined,
            dense_pre,
            dense,
            scores,
        })
    }
}

impl Parameters for LstmModel {
    fn named_tensors(&self) -> Vec<(String, &Tensor)> {
        vec![
            ("lstm.weight_ih".into(), &self.w_ih),
            ("lstm.weight_hh".into(), &self.w_hh),
            ("lstm.bias".into(), &self.b),
            ("hidden.weight".into(), &self.dense_w),
            ("hidden.bias".into(), &self.dense_b),
            ("output.weight".into(), &self.out_w),
            ("output.bias".into(), &self.out_b),
        ]
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        vec![
            &mut self.w_ih,
            &mut self.w_hh,
            &mut self.b,
            &mut self.dense_w,
            &mut self.dense_b,
            &mut self.out_w,
            &mut self.out_b,
        ]
    }
}

impl Network for LstmModel {
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
        let hsz = self.shape.hidden;

        let g_out: Vec<f64> = cache
            .scores
            .iter()
            .zip(&sample.gold)
            .map(|(&s, &y)| scale * output_gradient(Activation::Sigmoid, s, y, self.shape.labels))
            .collect();
        let mut g_dense = vec![0.0; self.shape.dense];
        affine_backward(&cache.dense, &self.out_w, &g_out, &mut grads.out_w, &mut grads.out_b, Some(&mut g_dense));
        for (g, &pre) in g_dense.iter_mut().zip(&cache.dense_pre) {
            if pre <= 0.0 {
                *g = 0.0;
            }
        }
        let mut g_joined = vec![0.0; cache.joined.len()];
        affine_backward(
            &cache.joined,
            &self.dense_w,
            &g_dense,
            &mut grads.dense_w,
            &mut grads.dense_b,
            Some(&mut g_joined),
        );

        // Backpropagation through time.
        let mut dh = g_joined[..hsz].to_vec();
        let mut dc = vec![0.0; hsz];
        let mut dz = vec![0.0; 4 * hsz];
        for step in cache.steps.iter().rev() {
            let gates = &step.gates;
            for j in 0..hsz {
                let (i, f, g, o) = (gates[j], gates[hsz + j], gates[2 * hsz + j], gates[3 * hsz + j]);
                let tc = step.tanh_c[j];
                let d_o = dh[j] * tc;
                dc[j] += dh[j] * o * (1.0 - tc * tc);
                let d_i = dc[j] * g;
                let d_g = dc[j] * i;
                let d_f = dc[j] * step.c_prev[j];
                dz[j] = d_i * i * (1.0 - i);
                dz[hsz + j] = d_f * f * (1.0 - f);
                dz[2 * hsz + j] = d_g * (1.0 - g * g);
                dz[3 * hsz + j] = d_o * o * (1.0 - o);
                dc[j] *= f;
            }
            affine_backward(&step.x, &self.w_ih, &dz, &mut grads.w_ih, &mut grads.b, None);
            let mut dh_prev = vec![0.0; hsz];
            let mut scratch_b = Tensor::zeros(&[4 * hsz]);
            affine_backward(&step.h_prev, &self.w_hh, &dz, &mut grads.w_hh, &mut scratch_b, Some(&mut dh_prev));
            dh = dh_prev;
        }
        Ok(loss)
    }

    fn branch_signature(&self, input: &Input) -> Result<Vec<u32>> {
        let cache = self.forward(input)?;
        let mut sig: Vec<u32> = cache.dense_pre.iter().map(|&v| u32::from(v > 0.0)).collect();
        sig.extend(cache.scores.iter().map(|&s| u32::from(super::loss::clamped(s))));
        Ok(sig)
    }
}

/// Embeds `tokens` and scores them with the LSTM.
pub fn forward_lstm<S: AsRef<str>>(
    tokens: &[S],
    embeddings: &EmbeddingTable,
    features: &FeatureVector,
    model: &LstmModel,
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

    fn small() -> LstmModel {
        LstmModel::init(
            LstmShape {
                embed_dim: 5,
                hidden: 256,
                dense: 128,
                lexicon_dim: 2,
                labels: 11,
            },
            &mut rand_chacha::ChaCha8Rng::seed_from_u64(9),
        )
    }

    #[test]
    fn single_token_runs_one_step() {
        let m = small();
        let input = Input::Sequence {
            embedded: vec![0.3, -0.1, 0.2, 0.0, 0.5],
            len: 1,
            features: vec![0.0, 0.5],
        };
        let cache = m.forward(&input).unwrap();
        assert_eq!(cache.steps.len(), 1);
        assert_eq!(cache.joined.len(), 256 + 2);
    }

    #[test]
    fn zero_params_give_sigmoid_of_bias() {
        let mut m = small();
        for t in m.tensors_mut() {
            t.fill(0.0);
        }
        m.out_b.data_mut()[0] = -2.0;
        let input = Input::Sequence {
            embedded: vec![1.0; 15],
            len: 3,
            features: vec![1.0, 1.0],
        };
        let s = m.scores(&input).unwrap();
        assert_eq!(s[0], sigmoid(-2.0));
        assert!(s[1..].iter().all(|&v| v == 0.5));
    }

    #[test]
    fn output_depends_only_on_the_single_token() {
        let m = small();
        let mk = |v: f64| Input::Sequence {
            embedded: vec![v; 5],
            len: 1,
            features: vec![0.0, 0.0],
        };
        assert_eq!(m.scores(&mk(0.2)).unwrap(), m.scores(&mk(0.2)).unwrap());
        assert_ne!(m.scores(&mk(0.2)).unwrap(), m.scores(&mk(-0.4)).unwrap());
    }
}
