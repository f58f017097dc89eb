//! Oracles and fixture builders shared by the integration tests and the
//! acceptance target. Everything here is written independently of the
//! library code it checks.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::sync::Arc;

use affectlens::aspects::{AspectModel, Example, Sentence};
use affectlens::embeddings::{EmbeddingTable, UnkPolicy};
use affectlens::error::Result;
use affectlens::labels::{LabelVector, Taxonomy};
use affectlens::metrics::EvalPair;
use affectlens::models::{batch_loss, CnnModel, CnnShape, HeadModel, HeadShape, Input, LstmModel, LstmShape, Network, Parameters, Sample};
use chrono::{DateTime, Duration, Utc};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Repository `data/` directory.
pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

pub fn synthetic_taxonomy(labels: usize) -> Arc<Taxonomy> {
    let names: Vec<String> = (0..labels).map(|i| format!("l{i:02}")).collect();
    Arc::new(Taxonomy::from_labels("synthetic", &names).unwrap())
}

// ---------------------------------------------------------------- metrics

/// Random gold/pred/score triples. Roughly a third of the samples draw
/// scores from a coarse grid so that LRAP ties are common; some samples have
/// empty gold or empty predictions.
pub fn random_triples(rng: &mut ChaCha8Rng, n: usize, labels: usize) -> Vec<(Vec<bool>, Vec<bool>, Vec<f64>)> {
    (0..n)
        .map(|_| {
            let density = rng.gen_range(0.0..0.6);
            let gold: Vec<bool> = (0..labels).map(|_| rng.gen_bool(density)).collect();
            let pred: Vec<bool> = (0..labels).map(|_| rng.gen_bool(density)).collect();
            let scores: Vec<f64> = if rng.gen_bool(0.35) {
                (0..labels).map(|_| rng.gen_range(0..4) as f64 / 4.0).collect()
            } else {
                (0..labels).map(|_| rng.gen::<f64>()).collect()
            };
            (gold, pred, scores)
        })
        .collect()
}

pub fn to_pairs(triples: &[(Vec<bool>, Vec<bool>, Vec<f64>)], taxonomy: &Arc<Taxonomy>) -> Vec<EvalPair> {
    triples
        .iter()
        .map(|(g, p, s)| {
            EvalPair::new(
                LabelVector::new(taxonomy.clone(), g.clone()).unwrap(),
                LabelVector::new(taxonomy.clone(), p.clone()).unwrap(),
                Some(s.clone()),
            )
            .unwrap()
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
pub struct OracleReport {
    pub jaccard: f64,
    pub f1_macro: f64,
    pub f1_micro: f64,
    pub lrap: f64,
    pub hamming_loss: f64,
    pub weak_accuracy: f64,
}

impl OracleReport {
    pub fn fields(&self) -> [(&'static str, f64); 6] {
        [
            ("jaccard", self.jaccard),
            ("f1_macro", self.f1_macro),
            ("f1_micro", self.f1_micro),
            ("lrap", self.lrap),
            ("hamming_loss", self.hamming_loss),
            ("weak_accuracy", self.weak_accuracy),
        ]
    }
}

fn set_of(bits: &[bool]) -> BTreeSet<usize> {
    bits.iter().enumerate().filter(|(_, b)| **b).map(|(i, _)| i).collect()
}

/// F1 from precision and recall; zero when nothing was predicted or nothing
/// was relevant.
fn f1_from_counts(tp: f64, fp: f64, fn_: f64) -> f64 {
    if tp == 0.0 {
        return 0.0;
    }
    let precision = tp / (tp + fp);
    let recall = tp / (tp + fn_);
    2.0 * precision * recall / (precision + recall)
}

/// Rank of every label: one plus the number of strictly higher scores.
fn ranks(scores: &[f64]) -> Vec<usize> {
    scores
        .iter()
        .map(|s| 1 + scores.iter().filter(|o| *o > s).count())
        .collect()
}

pub fn oracle(triples: &[(Vec<bool>, Vec<bool>, Vec<f64>)]) -> OracleReport {
    let n = triples.len() as f64;
    let labels = triples[0].0.len();

    let jaccard = triples
        .iter()
        .map(|(g, p, _)| {
            let (g, p) = (set_of(g), set_of(p));
            let union = g.union(&p).count();
            if union == 0 {
                1.0
            } else {
                g.intersection(&p).count() as f64 / union as f64
            }
        })
        .sum::<f64>()
        / n;

    let mut macro_sum = 0.0;
    let (mut tp_all, mut fp_all, mut fn_all) = (0.0, 0.0, 0.0);
    for l in 0..labels {
        let (mut tp, mut fp, mut fn_) = (0.0, 0.0, 0.0);
        for (g, p, _) in triples {
            match (g[l], p[l]) {
                (true, true) => tp += 1.0,
                (false, true) => fp += 1.0,
                (true, false) => fn_ += 1.0,
                (false, false) => {}
            }
        }
        macro_sum += f1_from_counts(tp, fp, fn_);
        tp_all += tp;
        fp_all += fp;
        fn_all += fn_;
    }

    let cells = n * labels as f64;
    let wrong: usize = triples.iter().map(|(g, p, _)| g.iter().zip(p).filter(|(a, b)| a != b).count()).sum();
    let right: usize = triples.iter().map(|(g, p, _)| g.iter().zip(p).filter(|(a, b)| a == b).count()).sum();

    let lrap = triples
        .iter()
        .map(|(g, _, s)| {
            let truth = set_of(g);
            if truth.is_empty() {
                return 1.0;
            }
            let r = ranks(s);
            truth
                .iter()
                .map(|&j| truth.iter().filter(|&&k| r[k] <= r[j]).count() as f64 / r[j] as f64)
                .sum::<f64>()
                / truth.len() as f64
        })
        .sum::<f64>()
        / n;

    OracleReport {
        jaccard,
        f1_macro: macro_sum / labels as f64,
        f1_micro: f1_from_counts(tp_all, fp_all, fn_all),
        lrap,
        hamming_loss: wrong as f64 / cells,
        weak_accuracy: right as f64 / cells,
    }
}

// --------------------------------------------------------- gradient checks

pub const FD_STEP: f64 = 1e-5;
pub const FD_TOLERANCE: f64 = 1e-4;
/// Gradients smaller than this are compared on an absolute scale: central
/// differences carry about 1e-10 of round-off and truncation error.
pub const FD_FLOOR: f64 = 1e-6;

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(FD_FLOOR)
}

#[derive(Debug, Clone, Default)]
pub struct GradCheck {
    pub checked: usize,
    /// Coordinates whose stencil crossed a kink.
    pub skipped: usize,
    pub max_rel: f64,
    pub worst: String,
}

impl GradCheck {
    fn record(&mut self, name: &str, i: usize, analytic: f64, numeric: f64) {
        let rel = relative_error(analytic, numeric);
        self.checked += 1;
        if rel >= self.max_rel {
            self.max_rel = rel;
            self.worst = format!("{name}[{i}] analytic {analytic:e} numeric {numeric:e}");
        }
    }

    pub fn merge(&mut self, other: GradCheck) {
        self.checked += other.checked;
        self.skipped += other.skipped;
        if other.max_rel >= self.max_rel {
            self.max_rel = other.max_rel;
            self.worst = other.worst;
        }
    }

    pub fn passed(&self) -> bool {
        self.checked > 0 && self.max_rel <= FD_TOLERANCE
    }
}

fn signature<N: Network>(net: &N, batch: &[&Sample]) -> Vec<u32> {
    batch.iter().flat_map(|s| net.branch_signature(&s.input).unwrap()).collect()
}

/// Compares every coordinate of the analytic batch gradient with a central
/// difference.
pub fn check_network<N: Network>(net: &N, samples: &[Sample]) -> Result<GradCheck> {
    let batch: Vec<&Sample> = samples.iter().collect();
    let (_, grads) = affectlens::models::backward(net, &batch)?;
    let base = signature(net, &batch);
    let mut report = GradCheck::default();
    let names: Vec<String> = net.named_tensors().into_iter().map(|(n, _)| n).collect();
    let analytic: Vec<Vec<f64>> = grads.tensors().iter().map(|t| t.data().to_vec()).collect();
    for (ti, name) in names.iter().enumerate() {
        for (i, &exact) in analytic[ti].iter().enumerate() {
            let mut plus = net.clone();
            plus.tensors_mut()[ti].data_mut()[i] += FD_STEP;
            let mut minus = net.clone();
            minus.tensors_mut()[ti].data_mut()[i] -= FD_STEP;
            if signature(&plus, &batch) != base || signature(&minus, &batch) != base {
                report.skipped += 1;
                continue;
            }
            let numeric = (batch_loss(&plus, &batch)? - batch_loss(&minus, &batch)?) / (2.0 * FD_STEP);
            report.record(name, i, exact, numeric);
        }
    }
    Ok(report)
}

pub fn check_abae(model: &AspectModel, batch: &[Example], ortho_weight: f64) -> Result<GradCheck> {
    let (_, grads) = model.gradients(batch, ortho_weight)?;
    let base = model.branch_signature(batch)?;
    let mut report = GradCheck::default();
    let names: Vec<String> = model.named_tensors().into_iter().map(|(n, _)| n).collect();
    for (ti, name) in names.iter().enumerate() {
        for i in 0..grads[ti].len() {
            let mut plus = model.clone();
            plus.tensors_mut()[ti].data_mut()[i] += FD_STEP;
            let mut minus = model.clone();
            minus.tensors_mut()[ti].data_mut()[i] -= FD_STEP;
            if plus.branch_signature(batch)? != base || minus.branch_signature(batch)? != base {
                report.skipped += 1;
                continue;
            }
            let numeric = (plus.loss(batch, ortho_weight)? - minus.loss(batch, ortho_weight)?) / (2.0 * FD_STEP);
            report.record(name, i, grads[ti].data()[i], numeric);
        }
    }
    Ok(report)
}

fn uniform_vec(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0) * scale).collect()
}

fn random_gold(rng: &mut ChaCha8Rng, labels: usize) -> Vec<bool> {
    (0..labels).map(|_| rng.gen_bool(0.4)).collect()
}

fn sequence_samples(rng: &mut ChaCha8Rng, count: usize, embed: usize, lexicon: usize, labels: usize) -> Vec<Sample> {
    (0..count)
        .map(|_| {
            let len = rng.gen_range(1..10);
            Sample {
                input: Input::Sequence {
                    embedded: uniform_vec(rng, len * embed, 1.0),
                    len,
                    features: (0..lexicon).map(|_| rng.gen_range(0..3) as f64).collect(),
                },
                gold: random_gold(rng, labels),
            }
        })
        .collect()
}

/// A small random CNN and a three-sample batch.
pub fn cnn_case(rng: &mut ChaCha8Rng) -> (CnnModel, Vec<Sample>) {
    let shape = CnnShape {
        embed_dim: rng.gen_range(2..5),
        filters: rng.gen_range(1..4),
        hidden: rng.gen_range(2..6),
        lexicon_dim: rng.gen_range(1..4),
        labels: rng.gen_range(1..5),
    };
    let model = CnnModel::init(shape, rng);
    let samples = sequence_samples(rng, 3, shape.embed_dim, shape.lexicon_dim, shape.labels);
    (model, samples)
}

pub fn lstm_case(rng: &mut ChaCha8Rng) -> (LstmModel, Vec<Sample>) {
    let shape = LstmShape {
        embed_dim: rng.gen_range(2..5),
        hidden: rng.gen_range(2..6),
        dense: rng.gen_range(2..6),
        lexicon_dim: rng.gen_range(1..4),
        labels: rng.gen_range(1..5),
    };
    let model = LstmModel::init(shape, rng);
    let samples = sequence_samples(rng, 3, shape.embed_dim, shape.lexicon_dim, shape.labels);
    (model, samples)
}

pub fn head_case(rng: &mut ChaCha8Rng) -> (HeadModel, Vec<Sample>) {
    let shape = HeadShape {
        sentence_dim: rng.gen_range(2..10),
        lexicon_dim: rng.gen_range(1..6),
        labels: rng.gen_range(1..12),
    };
    let model = HeadModel::init(shape, rng);
    let samples = (0..4)
        .map(|_| Sample {
            input: Input::Sentence {
                vector: uniform_vec(rng, shape.sentence_dim, 1.0),
                features: (0..shape.lexicon_dim).map(|_| rng.gen_range(0..3) as f64).collect(),
            },
            gold: random_gold(rng, shape.labels),
        })
        .collect();
    (model, samples)
}

/// A random ABAE model plus sentences and negatives over its vocabulary.
pub fn abae_case(rng: &mut ChaCha8Rng) -> (AspectModel, Vec<Sentence>, Vec<Vec<Vec<f64>>>) {
    use affectlens::tensor::Tensor;
    let d = rng.gen_range(2..6);
    let k = rng.gen_range(2..5);
    let v = rng.gen_range(k..k + 8);
    let vocab: Vec<String> = (0..v).map(|i| format!("w{i:02}")).collect();
    let words = Tensor::from_vec(&[v, d], uniform_vec(rng, v * d, 1.0)).unwrap();
    let t = Tensor::from_vec(&[k, d], uniform_vec(rng, k * d, 1.0)).unwrap();
    let bound = (1.0 / d as f64).sqrt();
    let m = Tensor::from_vec(&[d, d], uniform_vec(rng, d * d, bound)).unwrap();
    let w = Tensor::from_vec(&[k, d], uniform_vec(rng, k * d, bound)).unwrap();
    let b = Tensor::from_vec(&[k], uniform_vec(rng, k, bound)).unwrap();
    let model = AspectModel::new(vocab.clone(), words, t, m, w, b).unwrap();
    let sentences: Vec<Sentence> = (0..3)
        .map(|_| {
            let len = rng.gen_range(1..6);
            let tokens: Vec<&String> = (0..len).map(|_| vocab.choose(rng).unwrap()).collect();
            model.sentence(&tokens).unwrap()
        })
        .collect();
    let negatives = (0..sentences.len())
        .map(|_| (0..rng.gen_range(1..4)).map(|_| uniform_vec(rng, d, 1.0)).collect())
        .collect();
    (model, sentences, negatives)
}

// ------------------------------------------------------ synthetic corpora

/// Linearly separable sentence-vector data: label `l` is on iff `w_l · x`
/// exceeds a margin, with samples inside the margin rejected.
pub fn separable_head_dataset(rng: &mut ChaCha8Rng, n: usize, dim: usize, lexicon: usize, labels: usize) -> Vec<Sample> {
    let planes: Vec<Vec<f64>> = (0..labels).map(|_| uniform_vec(rng, dim, 1.0)).collect();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let x = uniform_vec(rng, dim, 1.0);
        let margins: Vec<f64> = planes.iter().map(|w| w.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>()).collect();
        if margins.iter().any(|m| m.abs() < 0.1) {
            continue;
        }
        out.push(Sample {
            input: Input::Sentence {
                vector: x,
                features: vec![0.0; lexicon],
            },
            gold: margins.iter().map(|m| *m > 0.0).collect(),
        });
    }
    out
}

/// Filler tokens with one planted keyword per active label.
pub fn keyword_corpus(rng: &mut ChaCha8Rng, n: usize, labels: usize, filler: usize) -> (Vec<Vec<String>>, Vec<Vec<bool>>) {
    let mut docs = Vec::with_capacity(n);
    let mut gold = Vec::with_capacity(n);
    for _ in 0..n {
        let g: Vec<bool> = (0..labels).map(|_| rng.gen_bool(0.25)).collect();
        let mut tokens: Vec<String> = (0..rng.gen_range(6..12)).map(|_| format!("filler{}", rng.gen_range(0..filler))).collect();
        for (l, on) in g.iter().enumerate() {
            if *on {
                let at = rng.gen_range(0..=tokens.len());
                tokens.insert(at, format!("keyword{l}"));
            }
        }
        docs.push(tokens);
        gold.push(g);
    }
    (docs, gold)
}

pub fn random_embeddings(rng: &mut ChaCha8Rng, words: &[String], dim: usize) -> EmbeddingTable {
    let rows = words.iter().map(|w| (w.clone(), uniform_vec(rng, dim, 1.0))).collect();
    EmbeddingTable::from_rows(rows, UnkPolicy::Zero).unwrap()
}

/// Three topics with disjoint vocabularies. Word vectors cluster tightly
/// around topic centres that share a common direction of weight `shared`,
/// as real embedding tables do.
pub struct PlantedTopics {
    pub embeddings: EmbeddingTable,
    pub sentences: Vec<Vec<String>>,
    pub topics: Vec<usize>,
}

pub fn planted_topics(rng: &mut ChaCha8Rng, sentences: usize, dim: usize, words_per_topic: usize, shared: f64) -> PlantedTopics {
    let common = uniform_vec(rng, dim, 1.0);
    let centres: Vec<Vec<f64>> = (0..3)
        .map(|_| uniform_vec(rng, dim, 1.0).iter().zip(&common).map(|(a, c)| a + shared * c).collect())
        .collect();
    let mut rows = Vec::new();
    let mut vocab: Vec<Vec<String>> = vec![Vec::new(); 3];
    for (t, centre) in centres.iter().enumerate() {
        for w in 0..words_per_topic {
            let word = format!("t{t}w{w:02}");
            let noise = uniform_vec(rng, dim, 0.2);
            rows.push((word.clone(), centre.iter().zip(&noise).map(|(c, e)| c + e).collect()));
            vocab[t].push(word);
        }
    }
    let embeddings = EmbeddingTable::from_rows(rows, UnkPolicy::Zero).unwrap();
    let mut out = Vec::with_capacity(sentences);
    let mut topics = Vec::with_capacity(sentences);
    for s in 0..sentences {
        let t = s % 3;
        let len = rng.gen_range(4..9);
        out.push((0..len).map(|_| vocab[t].choose(rng).unwrap().clone()).collect());
        topics.push(t);
    }
    PlantedTopics {
        embeddings,
        sentences: out,
        topics,
    }
}

/// Fraction of items whose cluster's majority topic matches their own.
pub fn purity(assigned: &[usize], topics: &[usize], clusters: usize) -> f64 {
    let mut table = vec![[0usize; 3]; clusters];
    for (&a, &t) in assigned.iter().zip(topics) {
        table[a][t] += 1;
    }
    table.iter().map(|row| *row.iter().max().unwrap()).sum::<usize>() as f64 / assigned.len() as f64
}

// ------------------------------------------------------------------ trends

pub fn origin() -> DateTime<Utc> {
    DateTime::parse_from_rfc3339("2020-03-01T00:00:00Z").unwrap().with_timezone(&Utc)
}

/// Tweets spread over roughly `days` days after `origin`, unsorted, each
/// with random labels.
pub fn random_timeline(rng: &mut ChaCha8Rng, n: usize, days: i64, taxonomy: &Arc<Taxonomy>) -> Vec<affectlens::trends::LabeledTweet> {
    (0..n)
        .map(|i| {
            let offset = rng.gen_range(0..days * 86_400);
            let bits: Vec<bool> = (0..taxonomy.len()).map(|_| rng.gen_bool(0.3)).collect();
            affectlens::trends::LabeledTweet {
                id: format!("t{i:05}"),
                created_at: origin() + Duration::seconds(offset),
                labels: LabelVector::new(taxonomy.clone(), bits).unwrap(),
            }
        })
        .collect()
}
