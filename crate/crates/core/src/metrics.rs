//! Multi-label evaluation measures.
//!
//! Conventions:
//! * Jaccard of an empty gold set against an empty prediction is 1.
//! * A label with no gold or predicted positives has F1 0 in the macro mean.
//! * LRAP ranks ties optimistically: `rank = 1 + #{strictly higher scores}`.
//!   A sample without true labels scores 1.
//! * Weak accuracy is `1 − hamming_loss`, so the two always sum to 1.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labels::LabelVector;

#[derive(Debug, Clone, PartialEq)]
pub struct EvalPair {
    pub gold: LabelVector,
    pub pred: LabelVector,
    pub scores: Option<Vec<f64>>,
}

impl EvalPair {
    pub fn new(gold: LabelVector, pred: LabelVector, scores: Option<Vec<f64>>) -> Result<Self> {
        if gold.taxonomy() != pred.taxonomy() {
            return Err(Error::Config(format!(
                "gold uses taxonomy {} but predictions use {}",
                gold.taxonomy().name(),
                pred.taxonomy().name()
            )));
        }
        if let Some(s) = &scores {
            if s.len() != gold.len() {
                return Err(Error::dims("prediction scores", gold.len(), s.len()));
            }
        }
        Ok(Self { gold, pred, scores })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub jaccard: f64,
    pub f1_macro: f64,
    pub f1_micro: f64,
    pub lrap: f64,
    pub hamming_loss: f64,
    pub weak_accuracy: f64,
}

fn check(pairs: &[EvalPair]) -> Result<usize> {
    let first = pairs
        .first()
        .ok_or_else(|| Error::EmptyInput("no evaluation pairs".into()))?;
    let labels = first.gold.len();
    for (i, p) in pairs.iter().enumerate() {
        if p.gold.len() != labels || p.pred.len() != labels {
            return Err(Error::dims(format!("label vector of pair {i}"), labels, p.gold.len().max(p.pred.len())));
        }
    }
    Ok(labels)
}

pub fn jaccard_accuracy(pairs: &[EvalPair]) -> Result<f64> {
    check(pairs)?;
    let mut total = 0.0;
    for p in pairs {
        let (mut inter, mut union) = (0usize, 0usize);
        for (&g, &q) in p.gold.bits().iter().zip(p.pred.bits()) {
            inter += usize::from(g && q);
            union += usize::from(g || q);
        }
        total += if union == 0 { 1.0 } else { inter as f64 / union as f64 };
    }
    Ok(total / pairs.len() as f64)
}

/// `(tp, fp, fn)` per label.
fn confusion(pairs: &[EvalPair], labels: usize) -> Vec<[u64; 3]> {
    let mut counts = vec![[0u64; 3]; labels];
    for p in pairs {
        for (c, (&g, &q)) in counts.iter_mut().zip(p.gold.bits().iter().zip(p.pred.bits())) {
            match (g, q) {
                (true, true) => c[0] += 1,
                (false, true) => c[1] += 1,
                (true, false) => c[2] += 1,
                (false, false) => {}
            }
        }
    }
    counts
}

fn f1(tp: u64, fp: u64, fn_: u64) -> f64 {
    let denom = 2 * tp + fp + fn_;
    if denom == 0 {
        0.0
    } else {
        (2 * tp) as f64 / denom as f64
    }
}

pub fn f1_macro(pairs: &[EvalPair]) -> Result<f64> {
    let labels = check(pairs)?;
    let counts = confusion(pairs, labels);
    Ok(counts.iter().map(|c| f1(c[0], c[1], c[2])).sum::<f64>() / labels as f64)
}

pub fn f1_micro(pairs: &[EvalPair]) -> Result<f64> {
    let labels = check(pairs)?;
    let pooled = confusion(pairs, labels)
        .into_iter()
        .fold([0u64; 3], |acc, c| [acc[0] + c[0], acc[1] + c[1], acc[2] + c[2]]);
    Ok(f1(pooled[0], pooled[1], pooled[2]))
}

pub fn hamming_loss(pairs: &[EvalPair]) -> Result<f64> {
    let labels = check(pairs)?;
    let wrong: usize = pairs
        .iter()
        .map(|p| p.gold.bits().iter().zip(p.pred.bits()).filter(|(g, q)| g != q).count())
        .sum();
    Ok(wrong as f64 / (pairs.len() * labels) as f64)
}

pub fn weak_accuracy(pairs: &[EvalPair]) -> Result<f64> {
    Ok(1.0 - hamming_loss(pairs)?)
}

/// LRAP for one sample.
pub fn lrap_sample(gold: &[bool], scores: &[f64]) -> f64 {
    let truth: Vec<usize> = (0..gold.len()).filter(|&j| gold[j]).collect();
    if truth.is_empty() {
        return 1.0;
    }
    let mut total = 0.0;
    for &j in &truth {
        let rank = 1 + scores.iter().filter(|&&s| s > scores[j]).count();
        let above = truth.iter().filter(|&&k| scores[k] >= scores[j]).count();
        total += above as f64 / rank as f64;
    }
    total / truth.len() as f64
}

pub fn lrap(pairs: &[EvalPair]) -> Result<f64> {
    check(pairs)?;
    let mut total = 0.0;
    for p in pairs {
        let scores = p.scores.as_ref().ok_or(Error::MissingScores)?;
        if scores.len() != p.gold.len() {
            return Err(Error::dims("prediction scores", p.gold.len(), scores.len()));
        }
        total += lrap_sample(p.gold.bits(), scores);
    }
    Ok(total / pairs.len() as f64)
}

pub fn evaluate(pairs: &[EvalPair]) -> Result<EvalReport> {
    let hamming = hamming_loss(pairs)?;
    Ok(EvalReport {
        jaccard: jaccard_accuracy(pairs)?,
        f1_macro: f1_macro(pairs)?,
        f1_micro: f1_micro(pairs)?,
        lrap: lrap(pairs)?,
        hamming_loss: hamming,
        weak_accuracy: 1.0 - hamming,
    })
}

impl EvalReport {
    /// `(name, value)` in report order.
    pub fn rows(&self) -> [(&'static str, f64); 6] {
        [
            ("jaccard", self.jaccard),
            ("f1_macro", self.f1_macro),
            ("f1_micro", self.f1_micro),
            ("lrap", self.lrap),
            ("hamming_loss", self.hamming_loss),
            ("weak_accuracy", self.weak_accuracy),
        ]
    }

    /// Header `metric,value`, one row per metric, values in shortest
    /// round-trip form.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric,value\n");
        for (name, v) in self.rows() {
            let _ = writeln!(out, "{name},{v}");
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{:<14} {:>6}\n", "metric", "value");
        for (name, v) in self.rows() {
            let _ = writeln!(out, "{name:<14} {v:>6.3}");
        }
        out
    }
}
