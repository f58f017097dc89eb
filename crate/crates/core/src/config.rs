//! Run configuration: one JSON document, overridable from the command line.
//!
//! Input paths are resolved against the data root, which is the first of
//! `data_dir` (itself relative to the config file), the
//! `AFFECTLENS_DATA_DIR` environment variable, and the config file's own
//! directory. `output_dir` is resolved against the config file's directory.

use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::aspects::AspectConfig;
use crate::corpus::{parse_timestamp, CorpusFormat};
use crate::embeddings::UnkPolicy;
use crate::error::{Error, Result};
use crate::models::{ModelKind, TrainConfig};
use crate::trends::{default_origin, DEFAULT_BIN_SIZE, DEFAULT_WINDOW_DAYS};

pub const DATA_DIR_ENV: &str = "AFFECTLENS_DATA_DIR";
pub const DEFAULT_SEED: u64 = 42;

/// Where labelled tweets for trends and aspects come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelSource {
    #[default]
    Predictions,
    Gold,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrendSettings {
    /// RFC 3339 or `YYYY-MM-DD HH:MM:SS`.
    pub origin: Option<String>,
    pub window_days: i64,
    pub bin_size: usize,
    /// Labels left out of the analysis. `None` drops surprise and official
    /// report when the taxonomy has them.
    pub drop: Option<Vec<String>>,
    pub source: LabelSource,
}

impl Default for TrendSettings {
    fn default() -> Self {
        Self {
            origin: None,
            window_days: DEFAULT_WINDOW_DAYS,
            bin_size: DEFAULT_BIN_SIZE,
            drop: None,
            source: LabelSource::Predictions,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AspectSettings {
    #[serde(flatten)]
    pub model: AspectConfig,
    /// Emotions to mine; `None` means every analysed emotion.
    pub emotions: Option<Vec<String>>,
    pub top_terms: usize,
    pub subcategory_map: Option<PathBuf>,
    /// Emotions with fewer tweets are skipped.
    pub min_tweets: usize,
}

impl Default for AspectSettings {
    fn default() -> Self {
        Self {
            model: AspectConfig::default(),
            emotions: None,
            top_terms: 10,
            subcategory_map: None,
            min_tweets: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data_dir: Option<PathBuf>,
    pub tables_dir: PathBuf,
    pub lexicon: PathBuf,
    pub embeddings: Option<PathBuf>,
    pub unk_policy: UnkPolicy,
    pub sentence_vectors: Option<PathBuf>,
    pub corpus: PathBuf,
    pub corpus_format: CorpusFormat,
    /// Gold corpus for `evaluate`; defaults to `corpus`.
    pub gold: Option<PathBuf>,
    pub taxonomy: Option<String>,
    pub output_dir: PathBuf,
    pub model: ModelKind,
    pub train: TrainConfig,
    pub trends: TrendSettings,
    pub aspects: AspectSettings,
    pub seed: u64,
    pub strict: bool,
    /// Drop tweets whose normalised text repeats an earlier tweet.
    pub dedup: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data_dir: None,
            tables_dir: PathBuf::from("tables"),
            lexicon: PathBuf::from("lexicon/affect194.json"),
            embeddings: None,
            unk_policy: UnkPolicy::Zero,
            sentence_vectors: None,
            corpus: PathBuf::from("corpus.jsonl"),
            corpus_format: CorpusFormat::Auto,
            gold: None,
            taxonomy: None,
            output_dir: PathBuf::from("out"),
            model: ModelKind::Head,
            train: TrainConfig::default(),
            trends: TrendSettings::default(),
            aspects: AspectSettings::default(),
            seed: DEFAULT_SEED,
            strict: false,
            dedup: false,
        }
    }
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub strict: bool,
    pub dedup: bool,
    pub model: Option<ModelKind>,
    pub epochs: Option<usize>,
    pub output_dir: Option<PathBuf>,
}

/// A configuration with every path made absolute-or-cwd-relative.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedConfig {
    pub config: RunConfig,
    pub data_root: PathBuf,
    pub config_dir: PathBuf,
}

impl RunConfig {
    pub fn parse(source: &str) -> Result<Self> {
        serde_json::from_str(source).map_err(|e| Error::Config(format!("invalid config: {e}")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.seed = seed;
        }
        self.strict |= o.strict;
        self.dedup |= o.dedup;
        if let Some(m) = o.model {
            self.model = m;
        }
        if let Some(e) = o.epochs {
            self.train.epochs = e;
        }
        if let Some(d) = &o.output_dir {
            self.output_dir = d.clone();
        }
    }

    /// Applies overrides, propagates the run seed and fixes the data root.
    pub fn resolve(mut self, config_path: &Path, overrides: &Overrides) -> Result<ResolvedConfig> {
        self.apply(overrides);
        self.train.seed = self.seed;
        self.aspects.model.seed = self.seed;
        self.train.validate()?;
        self.aspects.model.validate()?;
        if self.trends.window_days <= 0 {
            return Err(Error::Config("trends.window_days must be positive".into()));
        }
        if self.trends.bin_size == 0 {
            return Err(Error::Config("trends.bin_size must be positive".into()));
        }
        let config_dir = config_path.parent().map(Path::to_path_buf).unwrap_or_default();
        let data_root = match (&self.data_dir, std::env::var_os(DATA_DIR_ENV)) {
            (Some(d), _) => config_dir.join(d),
            (None, Some(env)) if !env.is_empty() => PathBuf::from(env),
            _ => config_dir.clone(),
        };
        let resolved = ResolvedConfig {
            config: self,
            data_root,
            config_dir,
        };
        resolved.origin()?;
        Ok(resolved)
    }
}

impl ResolvedConfig {
    pub fn input(&self, p: &Path) -> PathBuf {
        self.data_root.join(p)
    }

    pub fn output(&self, name: &str) -> PathBuf {
        self.config_dir.join(&self.config.output_dir).join(name)
    }

    pub fn require(&self, what: &str, p: &Option<PathBuf>) -> Result<PathBuf> {
        p.as_ref()
            .map(|p| self.input(p))
            .ok_or_else(|| Error::Config(format!("config does not set {what}")))
    }

    pub fn origin(&self) -> Result<DateTime<Utc>> {
        match &self.config.trends.origin {
            None => Ok(default_origin()),
            Some(s) => parse_timestamp(s).ok_or_else(|| Error::Config(format!("bad trends.origin {s:?}"))),
        }
    }
}
