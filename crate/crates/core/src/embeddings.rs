//! Static word embeddings and precomputed sentence vectors.
//!
//! Both file types are whitespace-separated text: `token v1 ... vd` for
//! word vectors (the GloVe text convention) and `id v1 ... vd` for sentence
//! vectors. Dimensions are taken from the first record.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnkPolicy {
    /// Out-of-vocabulary tokens map to the zero vector.
    #[default]
    Zero,
    /// Out-of-vocabulary tokens map to the mean of all stored vectors.
    Mean,
}

#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    dim: usize,
    words: Vec<String>,
    index: HashMap<String, usize>,
    data: Vec<f64>,
    unk: Vec<f64>,
    policy: UnkPolicy,
}

fn parse_values(
    fields: &[&str],
    origin: &str,
    line: usize,
) -> Result<Vec<f64>> {
    fields
        .iter()
        .map(|f| {
            let v: f64 = f
                .parse()
                .map_err(|_| Error::parse(origin, line, format!("not a number: {f:?}")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::parse(origin, line, format!("non-finite value {f:?}")))
            }
        })
        .collect()
}

// (line number, key, values)
type Record = (usize, String, Vec<f64>);

// Yields a record for every non-blank line, enforcing a single dimension
// across the file.
fn parse_records(source: &str, origin: &str) -> Result<(usize, Vec<Record>)> {
    let mut dim = None;
    let mut records = Vec::new();
    for (n, line) in source.lines().enumerate() {
        let line_no = n + 1;
        let mut fields = line.split_whitespace();
        let Some(key) = fields.next() else {
            continue;
        };
        let rest: Vec<&str> = fields.collect();
        let expected = *dim.get_or_insert(rest.len());
        if expected == 0 {
            return Err(Error::parse(origin, line_no, "record has no values"));
        }
        if rest.len() != expected {
            return Err(Error::RaggedDimension {
                origin: origin.to_string(),
                line: line_no,
                expected,
                found: rest.len(),
            });
        }
        records.push((line_no, key.to_string(), parse_values(&rest, origin, line_no)?));
    }
    match dim {
        Some(d) => Ok((d, records)),
        None => Err(Error::EmptyInput(format!("{origin} holds no vectors"))),
    }
}

fn format_row(out: &mut String, key: &str, values: &[f64]) {
    out.push_str(key);
    for v in values {
        // `{}` on f64 prints the shortest string that parses back exactly.
        let _ = write!(out, " {v}");
    }
    out.push('\n');
}

impl EmbeddingTable {
    pub fn from_rows(rows: Vec<(String, Vec<f64>)>, policy: UnkPolicy) -> Result<Self> {
        let dim = rows
            .first()
            .map(|(_, v)| v.len())
            .ok_or_else(|| Error::EmptyInput("embedding table has no rows".into()))?;
        if dim == 0 {
            return Err(Error::EmptyInput("embedding dimension is zero".into()));
        }
        let mut words = Vec::with_capacity(rows.len());
        let mut index = HashMap::with_capacity(rows.len());
        let mut data = Vec::with_capacity(rows.len() * dim);
        for (word, vector) in rows {
            if vector.len() != dim {
                return Err(Error::dims(format!("embedding for {word:?}"), dim, vector.len()));
            }
            if vector.iter().any(|v| !v.is_finite()) {
                return Err(Error::Config(format!("embedding for {word:?} is not finite")));
            }
            // First occurrence wins, as in most GloVe readers.
            if index.contains_key(&word) {
                log::debug!("duplicate embedding for {word:?} ignored");
                continue;
            }
            index.insert(word.clone(), words.len());
            words.push(word);
            data.extend_from_slice(&vector);
        }
        let mut table = Self {
            dim,
            words,
            index,
            data,
            unk: vec![0.0; dim],
            policy: UnkPolicy::Zero,
        };
        table.set_policy(policy);
        Ok(table)
    }

    pub fn parse(source: &str, origin: &str, policy: UnkPolicy) -> Result<Self> {
        let (_, records) = parse_records(source, origin)?;
        Self::from_rows(records.into_iter().map(|(_, k, v)| (k, v)).collect(), policy)
    }

    pub fn load(path: impl AsRef<Path>, policy: UnkPolicy) -> Result<Self> {
        let path = path.as_ref();
        let source = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&source, &path.display().to_string(), policy)
    }

    pub fn set_policy(&mut self, policy: UnkPolicy) {
        self.policy = policy;
        self.unk = match policy {
            UnkPolicy::Zero => vec![0.0; self.dim],
            UnkPolicy::Mean => {
                let mut mean = vec![0.0; self.dim];
                for row in self.data.chunks_exact(self.dim) {
                    for (m, v) in mean.iter_mut().zip(row) {
                        *m += v;
                    }
                }
                let n = self.words.len() as f64;
                mean.iter_mut().for_each(|m| *m /= n);
                mean
            }
        };
    }

    pub fn policy(&self) -> UnkPolicy {
        self.policy
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Vocabulary in file order.
    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.index
            .get(token)
            .map(|&i| &self.data[i * self.dim..(i + 1) * self.dim])
    }

    /// Total lookup: unknown tokens get the policy's fallback vector.
    pub fn lookup(&self, token: &str) -> &[f64] {
        self.get(token).unwrap_or(&self.unk)
    }

    /// Row-major `tokens.len() × dim` matrix of looked-up vectors.
    pub fn embed<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<f64> {
        let mut out = Vec::with_capacity(tokens.len() * self.dim);
        for t in tokens {
            out.extend_from_slice(self.lookup(t.as_ref()));
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, word) in self.words.iter().enumerate() {
            format_row(&mut out, word, &self.data[i * self.dim..(i + 1) * self.dim]);
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

pub fn lookup<'a>(token: &str, table: &'a EmbeddingTable) -> &'a [f64] {
    table.lookup(token)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SentenceVector {
    pub id: String,
    pub values: Vec<f64>,
}

/// Sentence vectors keyed by tweet id, all of one dimension.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SentenceVectors {
    dim: usize,
    vectors: BTreeMap<String, SentenceVector>,
}

impl SentenceVectors {
    pub fn parse(source: &str, origin: &str) -> Result<Self> {
        let (dim, records) = parse_records(source, origin)?;
        let mut vectors = BTreeMap::new();
        for (line, id, values) in records {
            if vectors.contains_key(&id) {
                return Err(Error::DuplicateId {
                    id,
                    origin: origin.to_string(),
                    line,
                });
            }
            vectors.insert(id.clone(), SentenceVector { id, values });
        }
        Ok(Self { dim, vectors })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let source = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&source, &path.display().to_string())
    }

    pub fn from_vectors(vectors: impl IntoIterator<Item = SentenceVector>) -> Result<Self> {
        let mut out = Self::default();
        for v in vectors {
            if out.vectors.is_empty() {
                out.dim = v.values.len();
            } else if v.values.len() != out.dim {
                return Err(Error::dims(format!("sentence vector {:?}", v.id), out.dim, v.values.len()));
            }
            if out.vectors.contains_key(&v.id) {
                return Err(Error::DuplicateId {
                    id: v.id,
                    origin: String::new(),
                    line: 0,
                });
            }
            out.vectors.insert(v.id.clone(), v);
        }
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&SentenceVector> {
        self.vectors.get(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &SentenceVector> {
        self.vectors.values()
    }

    /// Rows sorted by id.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for v in self.vectors.values() {
            format_row(&mut out, &v.id, &v.values);
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

pub fn load_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingTable> {
    EmbeddingTable::load(path, UnkPolicy::default())
}

pub fn load_sentence_vectors(path: impl AsRef<Path>) -> Result<SentenceVectors> {
    SentenceVectors::load(path)
}
