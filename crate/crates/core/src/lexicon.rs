//! Lexicon-based affect features.
//!
//! A lexicon is a JSON object mapping category names to term lists. Category
//! order follows key order in the file and fixes the layout of every
//! [`FeatureVector`]; the dimension is whatever the file defines.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;

use serde::de::{Deserializer, MapAccess, Visitor};
use serde::Deserialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct AffectLexicon {
    categories: Vec<String>,
    terms: Vec<HashSet<String>>,
    // term -> every category index it belongs to
    index: HashMap<String, Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn zeros(dim: usize) -> Self {
        Self {
            values: vec![0.0; dim],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }
}

// Keeps file order and duplicate keys, which a map type would hide.
struct OrderedCategories(Vec<(String, Vec<String>)>);

impl<'de> Deserialize<'de> for OrderedCategories {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct CategoriesVisitor;

        impl<'de> Visitor<'de> for CategoriesVisitor {
            type Value = OrderedCategories;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("an object mapping category names to term arrays")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> std::result::Result<Self::Value, A::Error> {
                let mut out = Vec::new();
                while let Some((k, v)) = map.next_entry::<String, Vec<String>>()? {
                    out.push((k, v));
                }
                Ok(OrderedCategories(out))
            }
        }

        deserializer.deserialize_map(CategoriesVisitor)
    }
}

impl AffectLexicon {
    pub fn new(categories: Vec<(String, Vec<String>)>) -> Result<Self> {
        if categories.is_empty() {
            return Err(Error::EmptyInput("lexicon has no categories".into()));
        }
        let mut names = Vec::with_capacity(categories.len());
        let mut terms = Vec::with_capacity(categories.len());
        let mut index: HashMap<String, Vec<usize>> = HashMap::new();
        for (c, (name, words)) in categories.into_iter().enumerate() {
            if names.contains(&name) {
                return Err(Error::DuplicateCategory { name });
            }
            let set: HashSet<String> = words.iter().map(|w| w.trim().to_lowercase()).filter(|w| !w.is_empty()).collect();
            for word in &set {
                index.entry(word.clone()).or_default().push(c);
            }
            names.push(name);
            terms.push(set);
        }
        Ok(Self {
            categories: names,
            terms,
            index,
        })
    }

    pub fn parse(source: &str, origin: &str) -> Result<Self> {
        let parsed: OrderedCategories = serde_json::from_str(source)
            .map_err(|e| Error::parse(origin, e.line(), e.to_string()))?;
        Self::new(parsed.0)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let source = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&source, &path.display().to_string())
    }

    pub fn dim(&self) -> usize {
        self.categories.len()
    }

    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    pub fn terms(&self, category: usize) -> &HashSet<String> {
        &self.terms[category]
    }

    /// Fraction of tokens hitting each category. A token listed under two
    /// categories counts toward both.
    pub fn featurize<S: AsRef<str>>(&self, tokens: &[S]) -> FeatureVector {
        let mut counts = vec![0usize; self.dim()];
        for token in tokens {
            if let Some(cats) = self.index.get(token.as_ref()) {
                for &c in cats {
                    counts[c] += 1;
                }
            }
        }
        let denom = tokens.len().max(1) as f64;
        FeatureVector {
            values: counts.into_iter().map(|n| n as f64 / denom).collect(),
        }
    }
}

pub fn featurize<S: AsRef<str>>(tokens: &[S], lexicon: &AffectLexicon) -> FeatureVector {
    lexicon.featurize(tokens)
}
