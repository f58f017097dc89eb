//! Emotion taxonomies and fixed-order label vectors.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Eleven emotions of the SemEval affect-in-tweets set. "Neutral" is the
/// all-zero vector, not a twelfth class.
pub const AIT_LABELS: [&str; 11] = [
    "anger",
    "anticipation",
    "disgust",
    "fear",
    "joy",
    "love",
    "optimism",
    "pessimism",
    "sadness",
    "surprise",
    "trust",
];

/// The COVID tweet labels: ten emotions plus the extra `surprise` column.
pub const SENWAVE_LABELS: [&str; 11] = [
    "optimistic",
    "thankful",
    "empathetic",
    "pessimistic",
    "anxious",
    "sad",
    "annoyed",
    "denial",
    "official_report",
    "joking",
    "surprise",
];

/// Labels dropped before trend analysis: one is undocumented upstream, the
/// other is not an affective state.
pub const DEFAULT_DROP: [&str; 2] = ["surprise", "official_report"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Taxonomy {
    name: String,
    labels: Vec<String>,
}

impl Taxonomy {
    pub fn ait() -> Self {
        Self::from_static("ait", &AIT_LABELS)
    }

    pub fn senwave() -> Self {
        Self::from_static("senwave", &SENWAVE_LABELS)
    }

    pub fn registered() -> [Taxonomy; 2] {
        [Self::ait(), Self::senwave()]
    }

    fn from_static(name: &str, labels: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            labels: labels.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// An ad-hoc taxonomy; names are canonicalised and must be unique.
    pub fn from_labels<S: AsRef<str>>(name: &str, labels: &[S]) -> Result<Self> {
        let labels: Vec<String> = labels.iter().map(|l| canonical_label(l.as_ref())).collect();
        if labels.is_empty() {
            return Err(Error::EmptyInput(format!("taxonomy {name} has no labels")));
        }
        let unique: BTreeSet<&String> = labels.iter().collect();
        if unique.len() != labels.len() {
            return Err(Error::Config(format!("taxonomy {name} repeats a label")));
        }
        Ok(Self {
            name: name.to_string(),
            labels,
        })
    }

    /// Looks up a registered taxonomy by name (`ait` or `senwave`).
    pub fn by_name(name: &str) -> Result<Self> {
        Self::registered()
            .into_iter()
            .find(|t| t.name.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::UnknownTaxonomy(name.to_string()))
    }

    /// Picks the single registered taxonomy containing every given label name.
    pub fn detect<'a>(names: impl IntoIterator<Item = &'a str>) -> Result<Self> {
        let names: BTreeSet<String> = names.into_iter().map(canonical_label).collect();
        let matches: Vec<Taxonomy> = Self::registered()
            .into_iter()
            .filter(|t| names.iter().all(|n| t.labels.contains(n)))
            .collect();
        match matches.len() {
            1 => Ok(matches.into_iter().next().unwrap()),
            0 => Err(Error::UnknownTaxonomy(format!(
                "no registered taxonomy contains all of {names:?}"
            ))),
            _ => Err(Error::UnknownTaxonomy(format!(
                "labels {names:?} fit more than one taxonomy; set it explicitly"
            ))),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        let key = canonical_label(name);
        self.labels
            .iter()
            .position(|l| *l == key)
            .ok_or_else(|| Error::UnknownLabel {
                name: name.to_string(),
                taxonomy: self.name.clone(),
            })
    }
}

impl fmt::Display for Taxonomy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// Lowercase, with spaces and hyphens folded to underscores
/// (`"Official Report"` → `"official_report"`).
pub fn canonical_label(name: &str) -> String {
    name.trim()
        .chars()
        .map(|c| if c == ' ' || c == '-' { '_' } else { c.to_ascii_lowercase() })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelVector {
    taxonomy: Arc<Taxonomy>,
    bits: Vec<bool>,
}

impl LabelVector {
    pub fn new(taxonomy: Arc<Taxonomy>, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != taxonomy.len() {
            return Err(Error::dims("label vector", taxonomy.len(), bits.len()));
        }
        Ok(Self { taxonomy, bits })
    }

    pub fn empty(taxonomy: Arc<Taxonomy>) -> Self {
        let bits = vec![false; taxonomy.len()];
        Self { taxonomy, bits }
    }

    pub fn from_names<S: AsRef<str>>(taxonomy: Arc<Taxonomy>, names: &[S]) -> Result<Self> {
        let mut bits = vec![false; taxonomy.len()];
        for name in names {
            bits[taxonomy.index_of(name.as_ref())?] = true;
        }
        Ok(Self { taxonomy, bits })
    }

    pub fn taxonomy(&self) -> &Arc<Taxonomy> {
        &self.taxonomy
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn names(&self) -> Vec<&str> {
        self.taxonomy
            .labels
            .iter()
            .zip(&self.bits)
            .filter(|(_, &b)| b)
            .map(|(l, _)| l.as_str())
            .collect()
    }
}

/// Removes the named labels, keeping the remaining ones in order.
///
/// The result lives in a derived taxonomy named `<base>-minus-<dropped>`.
/// Dropping every label is rejected.
pub fn filter_labels<S: AsRef<str>>(bits: &LabelVector, drop: &[S]) -> Result<LabelVector> {
    let reduced = reduce_taxonomy(bits.taxonomy(), drop)?;
    project(bits, &reduced)
}

/// The taxonomy left after dropping `drop` from `base`.
pub fn reduce_taxonomy<S: AsRef<str>>(base: &Taxonomy, drop: &[S]) -> Result<Arc<Taxonomy>> {
    let mut dropped = Vec::with_capacity(drop.len());
    for name in drop {
        let idx = base.index_of(name.as_ref())?;
        dropped.push(base.labels[idx].clone());
    }
    if dropped.is_empty() {
        return Ok(Arc::new(base.clone()));
    }
    let labels: Vec<String> = base
        .labels
        .iter()
        .filter(|l| !dropped.contains(l))
        .cloned()
        .collect();
    if labels.is_empty() {
        return Err(Error::EmptyInput(format!(
            "dropping {dropped:?} leaves no labels in {}",
            base.name
        )));
    }
    dropped.sort();
    dropped.dedup();
    Ok(Arc::new(Taxonomy {
        name: format!("{}-minus-{}", base.name, dropped.join("+")),
        labels,
    }))
}

/// Re-expresses `bits` in `target`, whose labels must all exist in the source.
pub fn project(bits: &LabelVector, target: &Arc<Taxonomy>) -> Result<LabelVector> {
    let projected = target
        .labels
        .iter()
        .map(|l| bits.taxonomy.index_of(l).map(|i| bits.bits[i]))
        .collect::<Result<Vec<_>>>()?;
    LabelVector::new(target.clone(), projected)
}
