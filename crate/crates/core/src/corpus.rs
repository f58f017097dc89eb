//! Tweet corpora on disk.
//!
//! Each record carries `id`, `created_at` and `text`, plus `labels` when the
//! corpus is annotated. JSONL stores `labels` as an array of names; CSV
//! stores them in one `;`-separated cell. Every record of a corpus must
//! agree on whether it carries labels.

use std::collections::HashSet;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use chrono::{DateTime, NaiveDateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labels::{LabelVector, Taxonomy};
use crate::normalize::RawTweet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    /// Chosen from the file extension; anything but `.csv` is JSONL.
    #[default]
    Auto,
    Jsonl,
    Csv,
}

impl CorpusFormat {
    fn resolve(self, path: &Path) -> CorpusFormat {
        match self {
            CorpusFormat::Auto => {
                let csv = path
                    .extension()
                    .and_then(|e| e.to_str())
                    .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
                if csv {
                    CorpusFormat::Csv
                } else {
                    CorpusFormat::Jsonl
                }
            }
            other => other,
        }
    }
}

/// Strict parsing aborts on the first malformed record; lenient parsing
/// skips and reports it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParseMode {
    Strict,
    #[default]
    Lenient,
}

/// A skipped record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Issue {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub tweets: Vec<RawTweet>,
    /// Gold labels aligned with `tweets`, when annotated.
    pub gold: Option<Vec<LabelVector>>,
    pub taxonomy: Option<Arc<Taxonomy>>,
    pub issues: Vec<Issue>,
}

impl Corpus {
    pub fn len(&self) -> usize {
        self.tweets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tweets.is_empty()
    }

    pub fn require_gold(&self) -> Result<(&[LabelVector], &Arc<Taxonomy>)> {
        match (&self.gold, &self.taxonomy) {
            (Some(g), Some(t)) => Ok((g, t)),
            _ => Err(Error::Config("the corpus carries no gold labels".into())),
        }
    }
}

#[derive(Debug, Deserialize)]
struct JsonRecord {
    id: serde_json::Value,
    created_at: String,
    #[serde(default)]
    text: String,
    #[serde(default)]
    labels: Option<Vec<String>>,
}

#[derive(Debug, Deserialize)]
struct CsvRecord {
    id: String,
    created_at: String,
    #[serde(default)]
    text: String,
    #[serde(default)]
    labels: Option<String>,
}

struct Record {
    line: usize,
    id: String,
    created_at: String,
    text: String,
    labels: Option<Vec<String>>,
}

/// Accepts RFC 3339, `YYYY-MM-DD HH:MM:SS` or `YYYY-MM-DDTHH:MM:SS` (read
/// as UTC), and the classic Twitter API form `Sun Mar 01 12:00:00 +0000
/// 2020`. Sub-second parts are truncated.
pub fn parse_timestamp(value: &str) -> Option<DateTime<Utc>> {
    let v = value.trim();
    let parsed = DateTime::parse_from_rfc3339(v)
        .map(|t| t.with_timezone(&Utc))
        .ok()
        .or_else(|| {
            ["%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M:%S"]
                .iter()
                .find_map(|f| NaiveDateTime::parse_from_str(v, f).ok())
                .map(|n| n.and_utc())
        })
        .or_else(|| {
            DateTime::parse_from_str(v, "%a %b %d %H:%M:%S %z %Y")
                .ok()
                .map(|t| t.with_timezone(&Utc))
        })?;
    DateTime::from_timestamp(parsed.timestamp(), 0)
}

fn split_labels(cell: &str) -> Vec<String> {
    cell.split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
        .collect()
}

/// One entry per non-blank record, in file order. Syntax failures stay in
/// place so strict mode reports the first bad line, whatever went wrong.
fn read_records(text: &str, format: CorpusFormat) -> Result<Vec<(usize, std::result::Result<Record, String>)>> {
    let mut out = Vec::new();
    match format {
        CorpusFormat::Csv => {
            let mut rdr = csv::ReaderBuilder::new().from_reader(text.as_bytes());
            let headers = rdr.headers()?.clone();
            // A blank cell under a `labels` header is an empty label set.
            let has_labels = headers.iter().any(|h| h == "labels");
            for row in rdr.records() {
                let row = match row {
                    Ok(r) => r,
                    Err(e) => {
                        let line = e.position().map_or(0, |p| p.line() as usize);
                        out.push((line, Err(e.to_string())));
                        continue;
                    }
                };
                let line = row.position().map_or(0, |p| p.line() as usize);
                let record = row.deserialize::<CsvRecord>(Some(&headers)).map(|r| Record {
                    line,
                    id: r.id,
                    created_at: r.created_at,
                    text: r.text,
                    labels: r.labels.or_else(|| has_labels.then(String::new)).as_deref().map(split_labels),
                });
                out.push((line, record.map_err(|e| e.to_string())));
            }
        }
        CorpusFormat::Jsonl | CorpusFormat::Auto => {
            for (i, raw) in text.lines().enumerate() {
                let line = i + 1;
                if raw.trim().is_empty() {
                    continue;
                }
                let record = serde_json::from_str::<JsonRecord>(raw).map_err(|e| e.to_string()).and_then(|r| {
                    let id = match r.id {
                        serde_json::Value::String(s) => s,
                        serde_json::Value::Number(n) => n.to_string(),
                        other => return Err(format!("id must be a string or number, got {other}")),
                    };
                    Ok(Record {
                        line,
                        id,
                        created_at: r.created_at,
                        text: r.text,
                        labels: r.labels,
                    })
                });
                out.push((line, record));
            }
        }
    }
    Ok(out)
}

/// Reads and validates a corpus.
///
/// `taxonomy` names the label set; when `None` it is detected from the label
/// names used in the file.
pub fn load_corpus(path: impl AsRef<Path>, format: CorpusFormat, mode: ParseMode, taxonomy: Option<&str>) -> Result<Corpus> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_corpus(&text, &path.display().to_string(), format.resolve(path), mode, taxonomy)
}

pub fn parse_corpus(text: &str, origin: &str, format: CorpusFormat, mode: ParseMode, taxonomy: Option<&str>) -> Result<Corpus> {
    let mut issues = Vec::new();
    let entries = read_records(text, format)?;
    let skip = |issues: &mut Vec<Issue>, err: Error, line: usize| -> Result<()> {
        match mode {
            ParseMode::Strict => Err(err),
            ParseMode::Lenient => {
                issues.push(Issue {
                    line,
                    message: err.to_string(),
                });
                Ok(())
            }
        }
    };

    let records = || entries.iter().filter_map(|(_, r)| r.as_ref().ok());
    let annotated = records().any(|r| r.labels.is_some());
    let taxonomy: Option<Arc<Taxonomy>> = if !annotated {
        None
    } else if let Some(name) = taxonomy {
        Some(Arc::new(Taxonomy::by_name(name)?))
    } else {
        let names: HashSet<&str> = records()
            .filter_map(|r| r.labels.as_ref())
            .flatten()
            .map(String::as_str)
            .collect();
        if names.is_empty() {
            return Err(Error::UnknownTaxonomy(
                "no label names to detect a taxonomy from; set it explicitly".into(),
            ));
        }
        Some(Arc::new(Taxonomy::detect(names)?))
    };

    let mut seen = HashSet::new();
    let mut tweets = Vec::with_capacity(entries.len());
    let mut gold = taxonomy.as_ref().map(|_| Vec::with_capacity(entries.len()));
    for (line, entry) in entries {
        let r = match entry {
            Ok(r) => r,
            Err(message) => {
                skip(&mut issues, Error::parse(origin, line, message), line)?;
                continue;
            }
        };
        if r.id.trim().is_empty() {
            skip(&mut issues, Error::parse(origin, r.line, "empty id"), r.line)?;
            continue;
        }
        let Some(created_at) = parse_timestamp(&r.created_at) else {
            skip(
                &mut issues,
                Error::Timestamp {
                    origin: origin.to_string(),
                    line: r.line,
                    value: r.created_at.clone(),
                },
                r.line,
            )?;
            continue;
        };
        let labels = match (&taxonomy, &r.labels) {
            (None, _) => None,
            (Some(_), None) => {
                skip(&mut issues, Error::parse(origin, r.line, "record has no labels"), r.line)?;
                continue;
            }
            (Some(t), Some(names)) => match LabelVector::from_names(t.clone(), names) {
                Ok(v) => Some(v),
                Err(e) => {
                    skip(&mut issues, Error::parse(origin, r.line, e.to_string()), r.line)?;
                    continue;
                }
            },
        };
        if !seen.insert(r.id.clone()) {
            skip(
                &mut issues,
                Error::DuplicateId {
                    id: r.id.clone(),
                    origin: origin.to_string(),
                    line: r.line,
                },
                r.line,
            )?;
            continue;
        }
        tweets.push(RawTweet {
            id: r.id,
            created_at,
            text: r.text,
        });
        if let (Some(g), Some(l)) = (gold.as_mut(), labels) {
            g.push(l);
        }
    }
    for issue in &issues {
        log::warn!("{origin}:{}: skipped: {}", issue.line, issue.message);
    }
    Ok(Corpus {
        tweets,
        gold,
        taxonomy,
        issues,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_valid_lines() {
        let src = r#"{"id":"1","created_at":"2020-03-01T10:00:00Z","text":"a"}
{"id":"2","created_at":"2020-03-02 10:00:00","text":"b"}
{"id":3,"created_at":"Mon Mar 02 11:00:00 +0000 2020","text":"c"}
"#;
        let c = parse_corpus(src, "t", CorpusFormat::Jsonl, ParseMode::Strict, None).unwrap();
        assert_eq!(c.len(), 3);
        assert!(c.gold.is_none());
        assert_eq!(c.tweets[2].id, "3");
    }

    #[test]
    fn duplicate_id_strict_names_it() {
        let src = "{\"id\":\"x\",\"created_at\":\"2020-03-01T00:00:00Z\",\"text\":\"a\"}\n".repeat(2);
        let err = parse_corpus(&src, "t", CorpusFormat::Jsonl, ParseMode::Strict, None).unwrap_err();
        assert!(matches!(&err, Error::DuplicateId { id, line: 2, .. } if id == "x"), "{err}");
        let c = parse_corpus(&src, "t", CorpusFormat::Jsonl, ParseMode::Lenient, None).unwrap();
        assert_eq!((c.len(), c.issues.len()), (1, 1));
    }

    #[test]
    fn senwave_labels_are_detected() {
        let src = r#"{"id":"1","created_at":"2020-03-01T10:00:00Z","text":"a","labels":["Optimistic","Official report"]}
{"id":"2","created_at":"2020-03-01T10:00:00Z","text":"b","labels":["denial","joking"]}
"#;
        let c = parse_corpus(src, "t", CorpusFormat::Jsonl, ParseMode::Strict, None).unwrap();
        assert_eq!(c.taxonomy.unwrap().name(), "senwave");
        assert_eq!(c.gold.unwrap()[0].count(), 2);
    }

    #[test]
    fn bad_timestamp_is_reported_with_line() {
        let src = "{\"id\":\"1\",\"created_at\":\"yesterday\",\"text\":\"a\"}\n";
        let err = parse_corpus(src, "t", CorpusFormat::Jsonl, ParseMode::Strict, None).unwrap_err();
        assert!(matches!(err, Error::Timestamp { line: 1, .. }));
    }

    #[test]
    fn csv_corpus_with_labels() {
        let src = "id,created_at,text,labels\n1,2020-03-01T00:00:00Z,\"hi, there\",sad;anxious\n2,2020-03-01T00:00:00Z,yo,\n";
        let c = parse_corpus(src, "t", CorpusFormat::Csv, ParseMode::Strict, Some("senwave")).unwrap();
        assert_eq!(c.tweets[0].text, "hi, there");
        assert_eq!(c.gold.as_ref().unwrap()[0].names(), ["anxious", "sad"]);
        assert_eq!(c.gold.unwrap()[1].count(), 0);
    }
}
