//! Attention-based aspect extraction (ABAE).
//!
//! A sentence is encoded by attention over its word vectors,
//!
//! ```text
//! ȳ = mean(e_i)    d_i = e_iᵀ M ȳ    a = softmax(d)    z = Σ a_i e_i
//! ```
//!
//! and reconstructed from a small matrix `T` of aspect embeddings,
//!
//! ```text
//! p = softmax(W z + b)    r = Tᵀ p
//! ```
//!
//! Training minimises the mean over sentences of the max-margin loss
//! `Σ_j max(0, 1 − r·z + r·n_j)` against negative sentences `n_j`, plus
//! `λ ‖T̂ T̂ᵀ − I‖²_F` with `T̂` the row-normalised `T`. Word vectors stay
//! frozen.

mod kmeans;
mod subcats;

use std::collections::{BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use kmeans::kmeans;
pub use subcats::{assign_subcategories, SubcategoryMap, SubcategorySeries, OTHER_SUBCATEGORY};

use crate::embeddings::EmbeddingTable;
use crate::error::{Error, Result};
use crate::models::{adamw_step, AdamWConfig, AdamWState, Parameters};
use crate::table::render_csv;
use crate::tensor::{dot, softmax, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AspectConfig {
    /// Number of aspects `K`.
    pub aspects: usize,
    /// Negative sentences per positive, `m`.
    pub negatives: usize,
    /// Orthogonality weight `λ`.
    pub ortho_weight: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub kmeans_iterations: usize,
    pub seed: u64,
}

impl Default for AspectConfig {
    fn default() -> Self {
        Self {
            aspects: 14,
            negatives: 20,
            ortho_weight: 0.1,
            epochs: 15,
            learning_rate: 1e-3,
            batch_size: 50,
            kmeans_iterations: 50,
            seed: 42,
        }
    }
}

impl AspectConfig {
    pub fn validate(&self) -> Result<()> {
        if self.aspects < 2 {
            return Err(Error::Config("at least two aspects are required".into()));
        }
        if self.negatives == 0 || self.batch_size == 0 {
            return Err(Error::Config("negatives and batch_size must be positive".into()));
        }
        if !(self.ortho_weight.is_finite() && self.ortho_weight >= 0.0) {
            return Err(Error::Config("ortho_weight must be non-negative".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::Config("aspect learning_rate must be positive".into()));
        }
        Ok(())
    }
}

/// Attention output for one sentence.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoded {
    pub attention: Vec<f64>,
    pub z: Vec<f64>,
    pub mean: Vec<f64>,
}

// (loss, encoding, aspect probabilities, reconstruction, which negatives are inside the margin)
type Hinge = (f64, Encoded, Vec<f64>, Vec<f64>, Vec<bool>);

/// Attention-pools the word vectors `rows` with the bilinear matrix `m`
/// (`d × d`). An empty sentence is an [`Error::EmptyInput`], which callers
/// treat as "skip this sentence".
pub fn attention_encode(rows: &[&[f64]], m: &Tensor) -> Result<Encoded> {
    let Some(first) = rows.first() else {
        return Err(Error::EmptyInput("sentence has no in-vocabulary tokens".into()));
    };
    let d = first.len();
    m.check_shape(&[d, d], "attention matrix")?;
    let mut mean = vec![0.0; d];
    for row in rows {
        if row.len() != d {
            return Err(Error::dims("word vector", d, row.len()));
        }
        for (s, v) in mean.iter_mut().zip(row.iter()) {
            *s += v;
        }
    }
    let n = rows.len() as f64;
    mean.iter_mut().for_each(|v| *v /= n);
    let q: Vec<f64> = m.data().chunks_exact(d).map(|mrow| dot(mrow, &mean)).collect();
    let logits: Vec<f64> = rows.iter().map(|e| dot(e, &q)).collect();
    let attention = softmax(&logits);
    let mut z = vec![0.0; d];
    for (a, e) in attention.iter().zip(rows) {
        for (zi, &ei) in z.iter_mut().zip(e.iter()) {
            *zi += a * ei;
        }
    }
    Ok(Encoded { attention, z, mean })
}

/// Aspect probabilities `p = softmax(W z + b)` and reconstruction `r = Tᵀ p`.
pub fn reconstruct(z: &[f64], w: &Tensor, b: &Tensor, t: &Tensor) -> Result<(Vec<f64>, Vec<f64>)> {
    let d = z.len();
    let k = b.len();
    w.check_shape(&[k, d], "aspect weight")?;
    t.check_shape(&[k, d], "aspect matrix")?;
    let logits: Vec<f64> = w
        .data()
        .chunks_exact(d)
        .zip(b.data())
        .map(|(row, bk)| dot(row, z) + bk)
        .collect();
    let p = softmax(&logits);
    let mut r = vec![0.0; d];
    for (pk, row) in p.iter().zip(t.data().chunks_exact(d)) {
        for (ri, &ti) in r.iter_mut().zip(row) {
            *ri += pk * ti;
        }
    }
    Ok((p, r))
}

fn row_norms(t: &Tensor, d: usize) -> Vec<f64> {
    t.data().chunks_exact(d).map(|row| dot(row, row).sqrt()).collect()
}

fn normalized_rows(t: &Tensor, d: usize) -> Vec<Vec<f64>> {
    t.data()
        .chunks_exact(d)
        .zip(row_norms(t, d))
        .map(|(row, n)| if n > 0.0 { row.iter().map(|v| v / n).collect() } else { vec![0.0; d] })
        .collect()
}

/// `‖T̂ T̂ᵀ − I‖²_F` for the row-normalised `T` (`K × d`).
pub fn orthogonality_penalty(t: &Tensor) -> f64 {
    let d = t.shape()[1];
    let rows = normalized_rows(t, d);
    let mut total = 0.0;
    for (i, a) in rows.iter().enumerate() {
        for (j, b) in rows.iter().enumerate() {
            let g = dot(a, b) - if i == j { 1.0 } else { 0.0 };
            total += g * g;
        }
    }
    total
}

/// Adds `scale · ∂penalty/∂T` into `grad`.
fn orthogonality_backward(t: &Tensor, scale: f64, grad: &mut Tensor) {
    let d = t.shape()[1];
    let norms = row_norms(t, d);
    let rows = normalized_rows(t, d);
    let k = rows.len();
    for i in 0..k {
        if norms[i] == 0.0 {
            continue;
        }
        // ∂P/∂T̂_i = 4 Σ_j G_ij T̂_j
        let mut g_hat = vec![0.0; d];
        for j in 0..k {
            let gij = dot(&rows[i], &rows[j]) - if i == j { 1.0 } else { 0.0 };
            for (g, &v) in g_hat.iter_mut().zip(&rows[j]) {
                *g += 4.0 * gij * v;
            }
        }
        // through T̂_i = T_i / ‖T_i‖
        let along = dot(&rows[i], &g_hat);
        let out = &mut grad.data_mut()[i * d..(i + 1) * d];
        for ((o, &g), &u) in out.iter_mut().zip(&g_hat).zip(&rows[i]) {
            *o += scale * (g - u * along) / norms[i];
        }
    }
}

/// In-vocabulary word vectors of one sentence, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Sentence {
    words: Vec<f64>,
    dim: usize,
}

impl Sentence {
    pub fn new(words: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 || words.is_empty() || words.len() % dim != 0 {
            return Err(Error::EmptyInput("sentence needs at least one word vector".into()));
        }
        Ok(Self { words, dim })
    }

    pub fn rows(&self) -> Vec<&[f64]> {
        self.words.chunks_exact(self.dim).collect()
    }

    pub fn len(&self) -> usize {
        self.words.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Mean word vector, the representation used for negatives.
    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for row in self.rows() {
            for (s, v) in m.iter_mut().zip(row) {
                *s += v;
            }
        }
        let n = self.len() as f64;
        m.iter_mut().for_each(|v| *v /= n);
        m
    }
}

/// A positive sentence with its negative samples.
#[derive(Debug, Clone, Copy)]
pub struct Example<'a> {
    pub sentence: &'a Sentence,
    pub negatives: &'a [Vec<f64>],
}

#[derive(Debug, Clone, PartialEq)]
pub struct AspectModel {
    vocab: Vec<String>,
    index: HashMap<String, usize>,
    /// Frozen word vectors, `V × d`, rows in `vocab` order.
    words: Tensor,
    /// `T`, `K × d`.
    pub aspects: Tensor,
    /// `M`, `d × d`.
    pub attention: Tensor,
    /// `W`, `K × d`.
    pub weight: Tensor,
    /// `b`, `K`.
    pub bias: Tensor,
}

impl Parameters for AspectModel {
    fn named_tensors(&self) -> Vec<(String, &Tensor)> {
        vec![
            ("aspect.T".into(), &self.aspects),
            ("aspect.M".into(), &self.attention),
            ("aspect.W".into(), &self.weight),
            ("aspect.b".into(), &self.bias),
        ]
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        vec![&mut self.aspects, &mut self.attention, &mut self.weight, &mut self.bias]
    }
}

impl AspectModel {
    /// Assembles a model from explicit parameters. `vocab` must be sorted
    /// and unique; `words` holds one row per vocabulary entry.
    pub fn new(vocab: Vec<String>, words: Tensor, aspects: Tensor, attention: Tensor, weight: Tensor, bias: Tensor) -> Result<Self> {
        let (v, d) = match words.shape() {
            [v, d] => (*v, *d),
            other => return Err(Error::Config(format!("word matrix must be 2-d, got shape {other:?}"))),
        };
        if v != vocab.len() {
            return Err(Error::dims("aspect vocabulary", v, vocab.len()));
        }
        if vocab.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("aspect vocabulary must be sorted and unique".into()));
        }
        let k = bias.len();
        if k < 2 {
            return Err(Error::Config("at least two aspects are required".into()));
        }
        aspects.check_shape(&[k, d], "aspect matrix")?;
        attention.check_shape(&[d, d], "attention matrix")?;
        weight.check_shape(&[k, d], "aspect weight")?;
        bias.check_shape(&[k], "aspect bias")?;
        let index = vocab.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        Ok(Self {
            vocab,
            index,
            words,
            aspects,
            attention,
            weight,
            bias,
        })
    }

    pub fn dim(&self) -> usize {
        self.words.shape()[1]
    }

    pub fn aspect_count(&self) -> usize {
        self.bias.len()
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn word_vector(&self, word: &str) -> Option<&[f64]> {
        let d = self.dim();
        self.index.get(word).map(|&i| &self.words.data()[i * d..(i + 1) * d])
    }

    /// Word vectors of the in-vocabulary tokens, or `None` if there are none.
    pub fn sentence<S: AsRef<str>>(&self, tokens: &[S]) -> Option<Sentence> {
        let mut words = Vec::new();
        for t in tokens {
            if let Some(v) = self.word_vector(t.as_ref()) {
                words.extend_from_slice(v);
            }
        }
        Sentence::new(words, self.dim()).ok()
    }

    pub fn encode(&self, sentence: &Sentence) -> Result<Encoded> {
        attention_encode(&sentence.rows(), &self.attention)
    }

    pub fn reconstruct(&self, z: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        reconstruct(z, &self.weight, &self.bias, &self.aspects)
    }

    /// Aspect probabilities for a token list; `None` when no token is known.
    pub fn aspect_probabilities<S: AsRef<str>>(&self, tokens: &[S]) -> Result<Option<Vec<f64>>> {
        let Some(s) = self.sentence(tokens) else {
            return Ok(None);
        };
        let enc = self.encode(&s)?;
        Ok(Some(self.reconstruct(&enc.z)?.0))
    }

    /// Most probable aspect, lowest index on ties.
    pub fn assign<S: AsRef<str>>(&self, tokens: &[S]) -> Result<Option<usize>> {
        Ok(self.aspect_probabilities(tokens)?.map(|p| argmax(&p)))
    }

    /// Hinge sum for one example.
    fn hinge(&self, ex: &Example) -> Result<Hinge> {
        let enc = self.encode(ex.sentence)?;
        let (p, r) = self.reconstruct(&enc.z)?;
        let rz = dot(&r, &enc.z);
        let mut total = 0.0;
        let mut active = Vec::with_capacity(ex.negatives.len());
        for n in ex.negatives {
            if n.len() != self.dim() {
                return Err(Error::dims("negative sample", self.dim(), n.len()));
            }
            let h = 1.0 - rz + dot(&r, n);
            active.push(h > 0.0);
            total += h.max(0.0);
        }
        Ok((total, enc, p, r, active))
    }

    /// Mean hinge over `batch` plus `λ` times the orthogonality penalty.
    pub fn loss(&self, batch: &[Example], ortho_weight: f64) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::EmptyInput("empty aspect batch".into()));
        }
        let mut total = 0.0;
        for ex in batch {
            total += self.hinge(ex)?.0;
        }
        Ok(total / batch.len() as f64 + ortho_weight * orthogonality_penalty(&self.aspects))
    }

    /// Which side of every hinge each example falls on.
    pub fn branch_signature(&self, batch: &[Example]) -> Result<Vec<bool>> {
        let mut sig = Vec::new();
        for ex in batch {
            sig.extend(self.hinge(ex)?.4);
        }
        Ok(sig)
    }

    /// Loss and its exact gradient, one tensor per [`Parameters`] entry.
    pub fn gradients(&self, batch: &[Example], ortho_weight: f64) -> Result<(f64, Vec<Tensor>)> {
        if batch.is_empty() {
            return Err(Error::EmptyInput("empty aspect batch".into()));
        }
        let d = self.dim();
        let k = self.aspect_count();
        let mut g_t = Tensor::zeros(self.aspects.shape());
        let mut g_m = Tensor::zeros(self.attention.shape());
        let mut g_w = Tensor::zeros(self.weight.shape());
        let mut g_b = Tensor::zeros(self.bias.shape());
        let scale = 1.0 / batch.len() as f64;
        let mut total = 0.0;

        for ex in batch {
            let (h, enc, p, r, active) = self.hinge(ex)?;
            total += h;
            let n_active = active.iter().filter(|&&a| a).count();
            if n_active == 0 {
                continue;
            }
            // ∂/∂r and the direct part of ∂/∂z
            let mut dr = vec![0.0; d];
            for (n, &on) in ex.negatives.iter().zip(&active) {
                if !on {
                    continue;
                }
                for ((g, &nv), &zv) in dr.iter_mut().zip(n).zip(&enc.z) {
                    *g += scale * (nv - zv);
                }
            }
            let mut dz: Vec<f64> = r.iter().map(|&v| -scale * n_active as f64 * v).collect();

            // r = Tᵀ p
            let mut dp = vec![0.0; k];
            for kk in 0..k {
                let row = &self.aspects.data()[kk * d..(kk + 1) * d];
                dp[kk] = dot(row, &dr);
                let grow = &mut g_t.data_mut()[kk * d..(kk + 1) * d];
                for (g, &v) in grow.iter_mut().zip(&dr) {
                    *g += p[kk] * v;
                }
            }
            // p = softmax(u), u = W z + b
            let pdp = dot(&p, &dp);
            for kk in 0..k {
                let du = p[kk] * (dp[kk] - pdp);
                g_b.data_mut()[kk] += du;
                let wrow = &self.weight.data()[kk * d..(kk + 1) * d];
                let gw = &mut g_w.data_mut()[kk * d..(kk + 1) * d];
                for i in 0..d {
                    gw[i] += du * enc.z[i];
                    dz[i] += du * wrow[i];
                }
            }
            // z = Σ a_i e_i, a = softmax(e_iᵀ M ȳ)
            let rows = ex.sentence.rows();
            let da: Vec<f64> = rows.iter().map(|e| dot(e, &dz)).collect();
            let ada = dot(&enc.attention, &da);
            let mut g = vec![0.0; d];
            for ((e, &a), &dai) in rows.iter().zip(&enc.attention).zip(&da) {
                let dd = a * (dai - ada);
                for (gi, &ei) in g.iter_mut().zip(e.iter()) {
                    *gi += dd * ei;
                }
            }
            let gm = g_m.data_mut();
            for (rr, &gr) in g.iter().enumerate() {
                for (c, &yc) in enc.mean.iter().enumerate() {
                    gm[rr * d + c] += gr * yc;
                }
            }
        }
        orthogonality_backward(&self.aspects, ortho_weight, &mut g_t);
        let loss = total * scale + ortho_weight * orthogonality_penalty(&self.aspects);
        Ok((loss, vec![g_t, g_m, g_w, g_b]))
    }
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbaeEpoch {
    /// Mean batch loss seen during the epoch.
    pub loss: f64,
    /// Orthogonality penalty at the end of the epoch.
    pub penalty: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AbaeOutcome {
    pub model: AspectModel,
    pub initial_penalty: f64,
    pub epochs: Vec<AbaeEpoch>,
    /// Input sentences without any in-vocabulary token.
    pub skipped: usize,
}

/// Fresh model over the vocabulary of `corpus`, `T` set to k-means centres.
pub fn init_abae<S: AsRef<str>>(
    corpus: &[Vec<S>],
    embeddings: &EmbeddingTable,
    config: &AspectConfig,
    rng: &mut ChaCha8Rng,
) -> Result<AspectModel> {
    config.validate()?;
    let vocab: Vec<String> = corpus
        .iter()
        .flatten()
        .map(|t| t.as_ref())
        .filter(|t| embeddings.contains(t))
        .map(String::from)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if vocab.is_empty() {
        return Err(Error::EmptyInput("no corpus token has a word vector".into()));
    }
    let d = embeddings.dim();
    let mut words = Vec::with_capacity(vocab.len() * d);
    for w in &vocab {
        words.extend_from_slice(embeddings.get(w).expect("filtered to known words"));
    }
    let points: Vec<&[f64]> = words.chunks_exact(d).collect();
    if points.len() < config.aspects {
        return Err(Error::Config(format!(
            "corpus vocabulary has {} words, fewer than the {} aspects requested",
            points.len(),
            config.aspects
        )));
    }
    let centres = kmeans(&points, config.aspects, config.kmeans_iterations, rng)?;
    let aspects = Tensor::from_vec(&[config.aspects, d], centres.concat())?;
    let bound = (1.0 / d as f64).sqrt();
    let attention = Tensor::uniform(&[d, d], bound, rng);
    let weight = Tensor::uniform(&[config.aspects, d], bound, rng);
    let bias = Tensor::uniform(&[config.aspects], bound, rng);
    let words = Tensor::from_vec(&[vocab.len(), d], words)?;
    AspectModel::new(vocab, words, aspects, attention, weight, bias)
}

/// Trains one ABAE model on a tokenised corpus. Deterministic per seed.
pub fn train_abae<S: AsRef<str>>(
    corpus: &[Vec<S>],
    embeddings: &EmbeddingTable,
    config: &AspectConfig,
) -> Result<AbaeOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = init_abae(corpus, embeddings, config, &mut rng)?;
    let sentences: Vec<Sentence> = corpus.iter().filter_map(|s| model.sentence(s)).collect();
    let skipped = corpus.len() - sentences.len();
    if sentences.len() < 2 {
        return Err(Error::EmptyInput(format!(
            "aspect training needs two sentences with known words, got {}",
            sentences.len()
        )));
    }
    let means: Vec<Vec<f64>> = sentences.iter().map(Sentence::mean).collect();
    let optimizer = AdamWConfig {
        learning_rate: config.learning_rate,
        weight_decay: 0.0,
        ..AdamWConfig::default()
    };
    let mut state = AdamWState::new(model.tensors());
    let initial_penalty = orthogonality_penalty(&model.aspects);
    let mut order: Vec<usize> = (0..sentences.len()).collect();
    let mut epochs = Vec::with_capacity(config.epochs);
    let n = sentences.len();

    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        let negatives: Vec<Vec<Vec<f64>>> = (0..n)
            .map(|s| {
                (0..config.negatives)
                    .map(|_| {
                        let j = rng.gen_range(0..n - 1);
                        means[if j >= s { j + 1 } else { j }].clone()
                    })
                    .collect()
            })
            .collect();
        let mut loss_sum = 0.0;
        let mut batches = 0;
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<Example> = chunk
                .iter()
                .map(|&i| Example {
                    sentence: &sentences[i],
                    negatives: &negatives[i],
                })
                .collect();
            let (loss, grads) = model.gradients(&batch, config.ortho_weight)?;
            let refs: Vec<&Tensor> = grads.iter().collect();
            adamw_step(&mut model.tensors_mut(), &refs, &mut state, &optimizer)?;
            loss_sum += loss;
            batches += 1;
        }
        let epoch = AbaeEpoch {
            loss: loss_sum / batches as f64,
            penalty: orthogonality_penalty(&model.aspects),
        };
        log::info!("abae epoch loss {:.6} penalty {:.6}", epoch.loss, epoch.penalty);
        epochs.push(epoch);
    }
    Ok(AbaeOutcome {
        model,
        initial_penalty,
        epochs,
        skipped,
    })
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let na = dot(a, a).sqrt();
    let nb = dot(b, b).sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot(a, b) / (na * nb)
    }
}

/// The `n` vocabulary words closest in cosine to aspect `k`, best first,
/// ties broken alphabetically.
pub fn top_terms(model: &AspectModel, k: usize, n: usize) -> Result<Vec<(String, f64)>> {
    if k >= model.aspect_count() {
        return Err(Error::Config(format!(
            "aspect {k} out of range (model has {})",
            model.aspect_count()
        )));
    }
    if n > model.vocab.len() {
        return Err(Error::TooManyTerms {
            requested: n,
            available: model.vocab.len(),
        });
    }
    let d = model.dim();
    let row = &model.aspects.data()[k * d..(k + 1) * d];
    let mut scored: Vec<(String, f64)> = model
        .vocab
        .iter()
        .zip(model.words.data().chunks_exact(d))
        .map(|(w, v)| (w.clone(), cosine(row, v)))
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    scored.truncate(n);
    Ok(scored)
}

/// `emotion,aspect,rank,term,cosine` rows for each labelled model.
pub fn aspects_csv(runs: &[(&str, &AspectModel)], n: usize) -> Result<String> {
    let mut rows = Vec::new();
    for (emotion, model) in runs {
        let n = n.min(model.vocab.len());
        for k in 0..model.aspect_count() {
            for (rank, (term, cos)) in top_terms(model, k, n)?.into_iter().enumerate() {
                rows.push(vec![
                    emotion.to_string(),
                    k.to_string(),
                    (rank + 1).to_string(),
                    term,
                    cos.to_string(),
                ]);
            }
        }
    }
    render_csv(["emotion", "aspect", "rank", "term", "cosine"], rows)
}
