use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use chrono::{DateTime, Duration, Utc};

use super::{top_terms, AspectModel};
use crate::error::{Error, Result};
use crate::normalize::CleanTweet;
use crate::table::render_csv;
use crate::trends::timestamp;

/// Bucket for aspects whose top terms hit no mapped subcategory.
pub const OTHER_SUBCATEGORY: &str = "other";

/// Many-to-many map from aspect term to subcategory names.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SubcategoryMap {
    terms: BTreeMap<String, BTreeSet<String>>,
}

impl SubcategoryMap {
    pub fn new(terms: BTreeMap<String, BTreeSet<String>>) -> Result<Self> {
        let mut out = BTreeMap::new();
        for (term, subs) in terms {
            if subs.is_empty() {
                return Err(Error::Config(format!("term {term:?} maps to no subcategory")));
            }
            out.entry(term.to_lowercase()).or_insert_with(BTreeSet::new).extend(subs);
        }
        Ok(Self { terms: out })
    }

    /// JSON object `{term: [subcategory, ...]}`.
    pub fn parse(source: &str) -> Result<Self> {
        Self::new(serde_json::from_str(source)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn get(&self, term: &str) -> Option<&BTreeSet<String>> {
        self.terms.get(term)
    }

    pub fn subcategories(&self) -> BTreeSet<&str> {
        self.terms.values().flatten().map(String::as_str).collect()
    }

    /// Subcategories reached by an aspect's top `n` terms, or
    /// [`OTHER_SUBCATEGORY`] if none is mapped.
    pub fn for_aspect(&self, model: &AspectModel, k: usize, n: usize) -> Result<BTreeSet<String>> {
        let n = n.min(model.vocab().len());
        let mut out = BTreeSet::new();
        for (term, _) in top_terms(model, k, n)? {
            if let Some(subs) = self.terms.get(&term) {
                out.extend(subs.iter().cloned());
            }
        }
        if out.is_empty() {
            out.insert(OTHER_SUBCATEGORY.to_string());
        }
        Ok(out)
    }
}

/// Subcategory counts per time window.
#[derive(Debug, Clone, PartialEq)]
pub struct SubcategorySeries {
    /// `[start, end)` of each window.
    pub windows: Vec<(DateTime<Utc>, DateTime<Utc>)>,
    pub subcategories: Vec<String>,
    /// `counts[w][s]`
    pub counts: Vec<Vec<u64>>,
    /// Tweets with no in-vocabulary token.
    pub unassigned: u64,
    pub before_origin: u64,
}

impl SubcategorySeries {
    /// `emotion,window,subcategory,count`, one row per window and
    /// subcategory, zeros included.
    pub fn to_csv_rows(&self, emotion: &str) -> Vec<Vec<String>> {
        let mut rows = Vec::new();
        for ((start, _), counts) in self.windows.iter().zip(&self.counts) {
            for (sub, c) in self.subcategories.iter().zip(counts) {
                rows.push(vec![emotion.to_string(), timestamp(start), sub.clone(), c.to_string()]);
            }
        }
        rows
    }

    pub fn to_csv(&self, emotion: &str) -> Result<String> {
        render_csv(SUBCATS_HEADER, self.to_csv_rows(emotion))
    }
}

pub(crate) const SUBCATS_HEADER: [&str; 4] = ["emotion", "window", "subcategory", "count"];

/// Assigns each tweet its most probable aspect and counts, per window, every
/// subcategory reached by that aspect's top `top_n` terms.
pub fn assign_subcategories(
    model: &AspectModel,
    map: &SubcategoryMap,
    tweets: &[CleanTweet],
    top_n: usize,
    window: Duration,
    origin: DateTime<Utc>,
) -> Result<SubcategorySeries> {
    let step = window.num_seconds();
    if step <= 0 {
        return Err(Error::Config("trend window must be at least one second".into()));
    }
    let per_aspect: Vec<BTreeSet<String>> = (0..model.aspect_count())
        .map(|k| map.for_aspect(model, k, top_n))
        .collect::<Result<_>>()?;
    let mut names: BTreeSet<String> = map.subcategories().into_iter().map(String::from).collect();
    names.extend(per_aspect.iter().flatten().cloned());
    let subcategories: Vec<String> = names.into_iter().collect();
    let column: BTreeMap<&str, usize> = subcategories.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();

    let mut windows = Vec::new();
    let mut counts: Vec<Vec<u64>> = Vec::new();
    let (mut unassigned, mut before_origin) = (0, 0);
    for tw in tweets {
        if tw.created_at < origin {
            before_origin += 1;
            continue;
        }
        let Some(k) = model.assign(&tw.tokens)? else {
            unassigned += 1;
            continue;
        };
        let w = ((tw.created_at - origin).num_seconds() / step) as usize;
        while windows.len() <= w {
            let start = origin + Duration::seconds(step * windows.len() as i64);
            windows.push((start, start + Duration::seconds(step)));
            counts.push(vec![0; subcategories.len()]);
        }
        for sub in &per_aspect[k] {
            counts[w][column[sub.as_str()]] += 1;
        }
    }
    Ok(SubcategorySeries {
        windows,
        subcategories,
        counts,
        unassigned,
        before_origin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn terms_need_a_subcategory() {
        assert!(SubcategoryMap::parse(r#"{"doctor": []}"#).is_err());
        let m = SubcategoryMap::parse(r#"{"Doctor": ["health", "workers"]}"#).unwrap();
        assert_eq!(m.get("doctor").unwrap().len(), 2);
        assert_eq!(m.subcategories().into_iter().collect::<Vec<_>>(), ["health", "workers"]);
    }
}
