//! End-to-end subcommands.
//!
//! Every artifact `F` is written together with `F.meta.json`, which records
//! the format version, the producing command and the run seed. Outputs carry
//! no wall-clock times or absolute paths, so reruns with unchanged inputs are
//! byte-identical.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::Duration;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::aspects::{self, assign_subcategories, train_abae, SubcategoryMap};
use crate::config::{LabelSource, ResolvedConfig};
use crate::corpus::{load_corpus, Corpus, ParseMode};
use crate::embeddings::{EmbeddingTable, SentenceVectors};
use crate::error::{Error, Result};
use crate::labels::{project, reduce_taxonomy, LabelVector, Taxonomy, DEFAULT_DROP};
use crate::lexicon::{AffectLexicon, FeatureVector};
use crate::metrics::{evaluate, EvalPair};
use crate::models::{train, Checkpoint, Input, ModelKind, Sample};
use crate::normalize::{normalize, CleanTweet, RewriteTables};
use crate::table::render_csv;
use crate::trends::{fixed_count_bins, timestamp, weekly_distribution, LabeledTweet};

/// Version stamped into every sidecar manifest.
pub const FORMAT_VERSION: u32 = 1;

pub const CLEAN_FILE: &str = "clean.jsonl";
pub const CHECKPOINT_FILE: &str = "model.ckpt";
pub const TRAIN_LOG_FILE: &str = "train_log.csv";
pub const PREDICTIONS_FILE: &str = "predictions.jsonl";
pub const REPORT_FILE: &str = "report.csv";
pub const TRENDS_FILE: &str = "trends.csv";
pub const BINS_FILE: &str = "bins.csv";
pub const ASPECTS_FILE: &str = "aspects.csv";
pub const SUBCATS_FILE: &str = "subcats.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Preprocess,
    Train,
    Predict,
    Evaluate,
    Trends,
    Aspects,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::Preprocess,
        Command::Train,
        Command::Predict,
        Command::Evaluate,
        Command::Trends,
        Command::Aspects,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Preprocess => "preprocess",
            Command::Train => "train",
            Command::Predict => "predict",
            Command::Evaluate => "evaluate",
            Command::Trends => "trends",
            Command::Aspects => "aspects",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// What a subcommand produced.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outcome {
    pub written: Vec<PathBuf>,
    /// Human-readable summary for stdout.
    pub report: String,
}

pub fn run(command: Command, cfg: &ResolvedConfig) -> Result<Outcome> {
    let mut out = Outcome::default();
    match command {
        Command::Preprocess => preprocess(cfg, &mut out)?,
        Command::Train => train_command(cfg, &mut out)?,
        Command::Predict => predict(cfg, &mut out)?,
        Command::Evaluate => evaluate_command(cfg, &mut out)?,
        Command::Trends => trends(cfg, &mut out)?,
        Command::Aspects => aspects_command(cfg, &mut out)?,
    }
    for p in &out.written {
        out.report.push_str(&format!("wrote {}\n", p.display()));
    }
    Ok(out)
}

fn write_artifact(path: &Path, contents: &[u8], command: Command, cfg: &ResolvedConfig, extra: Value, out: &mut Outcome) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))?;
    let mut meta = json!({
        "format_version": FORMAT_VERSION,
        "artifact": path.file_name().map(|n| n.to_string_lossy().into_owned()),
        "command": command.name(),
        "seed": cfg.config.seed,
        "producer": concat!("affectlens ", env!("CARGO_PKG_VERSION")),
    });
    if let (Value::Object(m), Value::Object(e)) = (&mut meta, extra) {
        m.extend(e);
    }
    let meta_path = sidecar(path);
    let mut text = serde_json::to_string_pretty(&meta)?;
    text.push('\n');
    fs::write(&meta_path, text).map_err(|e| Error::io(&meta_path, e))?;
    out.written.push(path.to_path_buf());
    Ok(())
}

/// `<file>.meta.json`
pub fn sidecar(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".meta.json");
    path.with_file_name(name)
}

/// A normalised corpus with lexicon features.
struct Prepared {
    corpus: Corpus,
    clean: Vec<CleanTweet>,
    features: Vec<FeatureVector>,
    deduplicated: usize,
}

fn mode(cfg: &ResolvedConfig) -> ParseMode {
    if cfg.config.strict {
        ParseMode::Strict
    } else {
        ParseMode::Lenient
    }
}

fn prepare(cfg: &ResolvedConfig, corpus_path: &Path) -> Result<Prepared> {
    let c = &cfg.config;
    let tables = RewriteTables::load_dir(cfg.input(&c.tables_dir))?;
    let lexicon = AffectLexicon::load(cfg.input(&c.lexicon))?;
    let mut corpus = load_corpus(corpus_path, c.corpus_format, mode(cfg), c.taxonomy.as_deref())?;
    if corpus.is_empty() {
        return Err(Error::EmptyInput(format!("{} holds no usable tweets", corpus_path.display())));
    }
    let mut clean: Vec<CleanTweet> = corpus.tweets.iter().map(|t| normalize(t, &tables)).collect();
    let mut deduplicated = 0;
    if c.dedup {
        let mut seen = HashSet::new();
        let keep: Vec<bool> = clean.iter().map(|t| seen.insert(t.text.clone())).collect();
        deduplicated = keep.iter().filter(|k| !**k).count();
        let mut it = keep.iter();
        corpus.tweets.retain(|_| *it.next().unwrap());
        let mut it = keep.iter();
        clean.retain(|_| *it.next().unwrap());
        if let Some(g) = corpus.gold.as_mut() {
            let mut it = keep.iter();
            g.retain(|_| *it.next().unwrap());
        }
    }
    let features = clean.iter().map(|t| lexicon.featurize(&t.tokens)).collect();
    Ok(Prepared {
        corpus,
        clean,
        features,
        deduplicated,
    })
}

fn corpus_meta(p: &Prepared) -> Value {
    json!({
        "tweets": p.clean.len(),
        "skipped_records": p.corpus.issues.len(),
        "deduplicated": p.deduplicated,
    })
}

#[derive(Serialize)]
struct CleanRecord<'a> {
    id: &'a str,
    created_at: String,
    text: &'a str,
    tokens: &'a [String],
    empty: bool,
}

fn preprocess(cfg: &ResolvedConfig, out: &mut Outcome) -> Result<()> {
    let p = prepare(cfg, &cfg.input(&cfg.config.corpus))?;
    let mut text = String::new();
    for t in &p.clean {
        let rec = CleanRecord {
            id: &t.id,
            created_at: timestamp(&t.created_at),
            text: &t.text,
            tokens: &t.tokens,
            empty: t.is_empty(),
        };
        text.push_str(&serde_json::to_string(&rec)?);
        text.push('\n');
    }
    let empty = p.clean.iter().filter(|t| t.is_empty()).count();
    let mut meta = corpus_meta(&p);
    meta["empty_tweets"] = json!(empty);
    write_artifact(&cfg.output(CLEAN_FILE), text.as_bytes(), Command::Preprocess, cfg, meta, out)
}

fn missing(what: &str, ids: Vec<String>) -> Result<()> {
    if ids.is_empty() {
        Ok(())
    } else {
        Err(Error::MissingIds { what: what.to_string(), ids })
    }
}

/// Classifier inputs for every prepared tweet.
fn build_inputs(cfg: &ResolvedConfig, kind: ModelKind, p: &Prepared) -> Result<Vec<Input>> {
    match kind {
        ModelKind::Head => {
            let path = cfg.require("sentence_vectors", &cfg.config.sentence_vectors)?;
            let vectors = SentenceVectors::load(&path)?;
            let absent: Vec<String> = p
                .clean
                .iter()
                .filter(|t| vectors.get(&t.id).is_none())
                .map(|t| t.id.clone())
                .collect();
            missing(&path.display().to_string(), absent)?;
            Ok(p.clean
                .iter()
                .zip(&p.features)
                .map(|(t, f)| Input::Sentence {
                    vector: vectors.get(&t.id).expect("checked above").values.clone(),
                    features: f.values.clone(),
                })
                .collect())
        }
        ModelKind::Cnn | ModelKind::Lstm => {
            let path = cfg.require("embeddings", &cfg.config.embeddings)?;
            let table = EmbeddingTable::load(&path, cfg.config.unk_policy)?;
            Ok(p.clean
                .iter()
                .zip(&p.features)
                .map(|(t, f)| Input::Sequence {
                    embedded: table.embed(&t.tokens),
                    len: t.tokens.len(),
                    features: f.values.clone(),
                })
                .collect())
        }
    }
}

fn train_command(cfg: &ResolvedConfig, out: &mut Outcome) -> Result<()> {
    let c = &cfg.config;
    let p = prepare(cfg, &cfg.input(&c.corpus))?;
    let (gold, taxonomy) = p.corpus.require_gold()?;
    let taxonomy = (**taxonomy).clone();
    let samples: Vec<Sample> = build_inputs(cfg, c.model, &p)?
        .into_iter()
        .zip(gold)
        .map(|(input, g)| Sample {
            input,
            gold: g.bits().to_vec(),
        })
        .collect();
    let outcome = train(c.model, &samples, &c.train)?;
    let mut log = vec![vec!["0".to_string(), outcome.initial_loss.to_string()]];
    for (i, l) in outcome.epoch_losses.iter().enumerate() {
        log.push(vec![(i + 1).to_string(), l.to_string()]);
    }
    let ck = Checkpoint::new(outcome.model, taxonomy, c.train, Some(outcome.optimizer))?;
    let mut meta = corpus_meta(&p);
    meta["model"] = json!(c.model);
    meta["taxonomy"] = json!(ck.taxonomy);
    meta["learning_rate"] = json!(c.train.optimizer(c.model).learning_rate);
    write_artifact(&cfg.output(CHECKPOINT_FILE), &ck.to_bytes()?, Command::Train, cfg, meta, out)?;
    let csv = render_csv(["epoch", "loss"], log)?;
    write_artifact(&cfg.output(TRAIN_LOG_FILE), csv.as_bytes(), Command::Train, cfg, json!({}), out)
}

/// One line of a predictions file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub id: String,
    pub labels: Vec<String>,
    pub scores: Vec<f64>,
}

fn predict(cfg: &ResolvedConfig, out: &mut Outcome) -> Result<()> {
    let c = &cfg.config;
    let ck = Checkpoint::load(cfg.output(CHECKPOINT_FILE))?;
    let p = prepare(cfg, &cfg.input(&c.corpus))?;
    let inputs = build_inputs(cfg, ck.model.kind(), &p)?;
    let taxonomy = Arc::new(ck.taxonomy.clone());
    let mut text = String::new();
    for (t, input) in p.clean.iter().zip(&inputs) {
        let scores = ck.model.scores(input)?;
        let bits = ck.model.activation().decide(&scores);
        let labels = LabelVector::new(taxonomy.clone(), bits)?;
        let rec = PredictionRecord {
            id: t.id.clone(),
            labels: labels.names().into_iter().map(String::from).collect(),
            scores,
        };
        text.push_str(&serde_json::to_string(&rec)?);
        text.push('\n');
    }
    let mut meta = corpus_meta(&p);
    meta["model"] = json!(ck.model.kind());
    meta["taxonomy"] = json!(ck.taxonomy);
    write_artifact(&cfg.output(PREDICTIONS_FILE), text.as_bytes(), Command::Predict, cfg, meta, out)
}

/// Reads a predictions file, keyed by id in file order.
pub fn load_predictions(path: &Path) -> Result<Vec<PredictionRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let origin = path.display().to_string();
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: PredictionRecord =
            serde_json::from_str(line).map_err(|e| Error::parse(&origin, i + 1, e.to_string()))?;
        if !seen.insert(rec.id.clone()) {
            return Err(Error::DuplicateId {
                id: rec.id,
                origin,
                line: i + 1,
            });
        }
        out.push(rec);
    }
    Ok(out)
}

/// The taxonomy recorded next to a predictions file, falling back to the
/// configured one.
fn predictions_taxonomy(cfg: &ResolvedConfig, path: &Path) -> Result<Taxonomy> {
    let meta = sidecar(path);
    if let Ok(text) = fs::read_to_string(&meta) {
        let v: Value = serde_json::from_str(&text)?;
        if let Some(t) = v.get("taxonomy") {
            return Ok(serde_json::from_value(t.clone())?);
        }
    }
    match &cfg.config.taxonomy {
        Some(name) => Taxonomy::by_name(name),
        None => Err(Error::Config(format!(
            "{} has no taxonomy manifest; set taxonomy in the config",
            path.display()
        ))),
    }
}

/// Gold corpus ids and prediction ids must match exactly.
fn join_ids<'a>(gold_ids: impl Iterator<Item = &'a str>, preds: &'a [PredictionRecord], pred_origin: &Path, gold_origin: &Path) -> Result<HashMap<&'a str, &'a PredictionRecord>> {
    let by_id: HashMap<&str, &PredictionRecord> = preds.iter().map(|r| (r.id.as_str(), r)).collect();
    let gold_ids: Vec<&str> = gold_ids.collect();
    let gold_set: HashSet<&str> = gold_ids.iter().copied().collect();
    let no_pred: Vec<String> = gold_ids.iter().filter(|id| !by_id.contains_key(*id)).map(|s| s.to_string()).collect();
    missing(&pred_origin.display().to_string(), no_pred)?;
    let no_gold: Vec<String> = preds
        .iter()
        .filter(|r| !gold_set.contains(r.id.as_str()))
        .map(|r| r.id.clone())
        .collect();
    missing(&gold_origin.display().to_string(), no_gold)?;
    Ok(by_id)
}

fn evaluate_command(cfg: &ResolvedConfig, out: &mut Outcome) -> Result<()> {
    let c = &cfg.config;
    let gold_path = cfg.input(c.gold.as_ref().unwrap_or(&c.corpus));
    let p = prepare(cfg, &gold_path)?;
    let (gold, taxonomy) = p.corpus.require_gold()?;
    let pred_path = cfg.output(PREDICTIONS_FILE);
    let preds = load_predictions(&pred_path)?;
    let by_id = join_ids(p.corpus.tweets.iter().map(|t| t.id.as_str()), &preds, &pred_path, &gold_path)?;
    let mut pairs = Vec::with_capacity(gold.len());
    for (t, g) in p.corpus.tweets.iter().zip(gold) {
        let rec = by_id[t.id.as_str()];
        let pred = LabelVector::from_names(taxonomy.clone(), &rec.labels)?;
        pairs.push(EvalPair::new(g.clone(), pred, Some(rec.scores.clone()))?);
    }
    let report = evaluate(&pairs)?;
    let meta = json!({ "pairs": pairs.len(), "taxonomy": &**taxonomy });
    write_artifact(&cfg.output(REPORT_FILE), report.to_csv().as_bytes(), Command::Evaluate, cfg, meta, out)?;
    out.report.push_str(&report.to_text());
    Ok(())
}

/// Tweets with the labels used for trend and aspect analysis, already
/// reduced to the analysed emotions.
fn analysis_tweets(cfg: &ResolvedConfig, p: &Prepared) -> Result<(Vec<LabeledTweet>, Arc<Taxonomy>)> {
    let c = &cfg.config;
    let (labels, taxonomy): (Vec<LabelVector>, Arc<Taxonomy>) = match c.trends.source {
        LabelSource::Gold => {
            let (g, t) = p.corpus.require_gold()?;
            (g.to_vec(), t.clone())
        }
        LabelSource::Predictions => {
            let pred_path = cfg.output(PREDICTIONS_FILE);
            let preds = load_predictions(&pred_path)?;
            let taxonomy = Arc::new(predictions_taxonomy(cfg, &pred_path)?);
            let by_id = join_ids(
                p.corpus.tweets.iter().map(|t| t.id.as_str()),
                &preds,
                &pred_path,
                &cfg.input(&c.corpus),
            )?;
            let labels = p
                .corpus
                .tweets
                .iter()
                .map(|t| LabelVector::from_names(taxonomy.clone(), &by_id[t.id.as_str()].labels))
                .collect::<Result<_>>()?;
            (labels, taxonomy)
        }
    };
    let drop: Vec<String> = match &c.trends.drop {
        Some(d) => d.clone(),
        None if DEFAULT_DROP.iter().all(|l| taxonomy.index_of(l).is_ok()) => {
            DEFAULT_DROP.iter().map(|s| s.to_string()).collect()
        }
        None => Vec::new(),
    };
    let reduced = reduce_taxonomy(&taxonomy, &drop)?;
    let tweets = p
        .corpus
        .tweets
        .iter()
        .zip(labels)
        .map(|(t, l)| {
            Ok(LabeledTweet {
                id: t.id.clone(),
                created_at: t.created_at,
                labels: project(&l, &reduced)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok((tweets, reduced))
}

fn trends(cfg: &ResolvedConfig, out: &mut Outcome) -> Result<()> {
    let c = &cfg.config;
    let p = prepare(cfg, &cfg.input(&c.corpus))?;
    let (tweets, taxonomy) = analysis_tweets(cfg, &p)?;
    let origin = cfg.origin()?;
    let series = weekly_distribution(&tweets, &taxonomy, Duration::days(c.trends.window_days), origin)?;
    let bins = fixed_count_bins(&tweets, &taxonomy, c.trends.bin_size)?;
    let meta = json!({
        "taxonomy": &*taxonomy,
        "origin": timestamp(&origin),
        "window_days": c.trends.window_days,
        "before_origin": series.before_origin,
        "label_source": c.trends.source,
    });
    write_artifact(&cfg.output(TRENDS_FILE), series.to_csv()?.as_bytes(), Command::Trends, cfg, meta, out)?;
    let meta = json!({ "taxonomy": &*taxonomy, "bin_size": c.trends.bin_size, "label_source": c.trends.source });
    write_artifact(&cfg.output(BINS_FILE), bins.to_csv()?.as_bytes(), Command::Trends, cfg, meta, out)
}

fn aspects_command(cfg: &ResolvedConfig, out: &mut Outcome) -> Result<()> {
    let c = &cfg.config;
    let settings = &c.aspects;
    let p = prepare(cfg, &cfg.input(&c.corpus))?;
    let (tweets, taxonomy) = analysis_tweets(cfg, &p)?;
    let table = EmbeddingTable::load(cfg.require("embeddings", &c.embeddings)?, c.unk_policy)?;
    let map = match &settings.subcategory_map {
        Some(path) => SubcategoryMap::load(cfg.input(path))?,
        None => SubcategoryMap::default(),
    };
    let emotions: Vec<String> = match &settings.emotions {
        Some(list) => list
            .iter()
            .map(|e| taxonomy.index_of(e).map(|i| taxonomy.labels()[i].clone()))
            .collect::<Result<_>>()?,
        None => taxonomy.labels().to_vec(),
    };
    let origin = cfg.origin()?;
    let window = Duration::days(c.trends.window_days);

    let mut models = Vec::new();
    let mut sub_rows = Vec::new();
    let mut runs = BTreeMap::new();
    for emotion in &emotions {
        let idx = taxonomy.index_of(emotion)?;
        let subset: Vec<&CleanTweet> = tweets
            .iter()
            .zip(&p.clean)
            .filter(|(t, _)| t.labels.bits()[idx])
            .map(|(_, ct)| ct)
            .collect();
        if subset.len() < settings.min_tweets {
            log::warn!("skipping aspects for {emotion}: {} tweets", subset.len());
            runs.insert(emotion.clone(), json!({ "tweets": subset.len(), "skipped": "too few tweets" }));
            continue;
        }
        let corpus: Vec<Vec<String>> = subset.iter().map(|t| t.tokens.clone()).collect();
        let outcome = match train_abae(&corpus, &table, &settings.model) {
            Ok(o) => o,
            Err(e @ (Error::EmptyInput(_) | Error::Config(_))) => {
                log::warn!("skipping aspects for {emotion}: {e}");
                runs.insert(emotion.clone(), json!({ "tweets": subset.len(), "skipped": e.to_string() }));
                continue;
            }
            Err(e) => return Err(e),
        };
        let owned: Vec<CleanTweet> = subset.into_iter().cloned().collect();
        let series = assign_subcategories(&outcome.model, &map, &owned, settings.top_terms, window, origin)?;
        sub_rows.extend(series.to_csv_rows(emotion));
        runs.insert(
            emotion.clone(),
            json!({
                "tweets": owned.len(),
                "sentences_without_vectors": outcome.skipped,
                "initial_penalty": outcome.initial_penalty,
                "final_penalty": outcome.epochs.last().map(|e| e.penalty),
                "final_loss": outcome.epochs.last().map(|e| e.loss),
                "unassigned": series.unassigned,
                "before_origin": series.before_origin,
            }),
        );
        models.push((emotion.clone(), outcome.model));
    }
    let refs: Vec<(&str, &aspects::AspectModel)> = models.iter().map(|(e, m)| (e.as_str(), m)).collect();
    let csv = aspects::aspects_csv(&refs, settings.top_terms)?;
    let meta = json!({
        "taxonomy": &*taxonomy,
        "aspects": settings.model,
        "top_terms": settings.top_terms,
        "runs": runs,
    });
    write_artifact(&cfg.output(ASPECTS_FILE), csv.as_bytes(), Command::Aspects, cfg, meta, out)?;
    let csv = render_csv(["emotion", "window", "subcategory", "count"], sub_rows)?;
    let meta = json!({ "origin": timestamp(&origin), "window_days": c.trends.window_days });
    write_artifact(&cfg.output(SUBCATS_FILE), csv.as_bytes(), Command::Aspects, cfg, meta, out)
}
