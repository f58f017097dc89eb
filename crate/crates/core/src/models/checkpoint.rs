//! Binary checkpoint format.
//!
//! ```text
//! offset  size  content
//! 0       8     magic "AFLCKPT1"
//! 8       8     manifest length n, u64 little-endian
//! 16      n     manifest, UTF-8 JSON
//! 16+n    ...   tensor payloads, f64 little-endian, in manifest order
//! ```
//!
//! The manifest lists every payload tensor by name and shape. Model
//! parameters come first, followed by the optimizer moments named
//! `adamw.m.<param>` and `adamw.v.<param>` when optimizer state is saved.
//! Floats are stored as raw bits, so `load(save(c)) == c` exactly.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    AdamWState, CnnModel, CnnShape, HeadModel, HeadShape, LstmModel, LstmShape, Model, ModelKind, TrainConfig,
};
use crate::error::{Error, Result};
use crate::labels::Taxonomy;
use crate::tensor::Tensor;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"AFLCKPT1";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelShape {
    Cnn(CnnShape),
    Lstm(LstmShape),
    Head(HeadShape),
}

impl ModelShape {
    pub fn of(model: &Model) -> Self {
        match model {
            Model::Cnn(m) => ModelShape::Cnn(m.shape()),
            Model::Lstm(m) => ModelShape::Lstm(m.shape()),
            Model::Head(m) => ModelShape::Head(m.shape()),
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            ModelShape::Cnn(_) => ModelKind::Cnn,
            ModelShape::Lstm(_) => ModelKind::Lstm,
            ModelShape::Head(_) => ModelKind::Head,
        }
    }

    pub fn labels(&self) -> usize {
        match self {
            ModelShape::Cnn(s) => s.labels,
            ModelShape::Lstm(s) => s.labels,
            ModelShape::Head(s) => s.labels,
        }
    }

    /// A model of this shape with placeholder parameter values.
    fn skeleton(&self) -> Model {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        match *self {
            ModelShape::Cnn(s) => Model::Cnn(CnnModel::init(s, &mut rng)),
            ModelShape::Lstm(s) => Model::Lstm(LstmModel::init(s, &mut rng)),
            ModelShape::Head(s) => Model::Head(HeadModel::zeros(s)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub shape: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub kind: ModelKind,
    pub shape: ModelShape,
    pub taxonomy: Taxonomy,
    pub config: TrainConfig,
    pub seed: u64,
    /// AdamW step count; absent when no optimizer state is stored.
    pub optimizer_step: Option<u64>,
    pub tensors: Vec<TensorEntry>,
}

/// A trained model with everything needed to resume or reproduce it.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: Model,
    pub taxonomy: Taxonomy,
    pub config: TrainConfig,
    pub optimizer: Option<AdamWState>,
}

impl Checkpoint {
    pub fn new(model: Model, taxonomy: Taxonomy, config: TrainConfig, optimizer: Option<AdamWState>) -> Result<Self> {
        if model.label_count() != taxonomy.len() {
            return Err(Error::dims("checkpoint taxonomy", model.label_count(), taxonomy.len()));
        }
        Ok(Self {
            model,
            taxonomy,
            config,
            optimizer,
        })
    }

    pub fn manifest(&self) -> Manifest {
        let named = self.model.named_tensors();
        let mut tensors: Vec<TensorEntry> = named
            .iter()
            .map(|(name, t)| TensorEntry {
                name: name.clone(),
                shape: t.shape().to_vec(),
            })
            .collect();
        if let Some(state) = &self.optimizer {
            for (prefix, moments) in [("adamw.m.", &state.m), ("adamw.v.", &state.v)] {
                for ((name, _), t) in named.iter().zip(moments) {
                    tensors.push(TensorEntry {
                        name: format!("{prefix}{name}"),
                        shape: t.shape().to_vec(),
                    });
                }
            }
        }
        Manifest {
            format_version: CHECKPOINT_VERSION,
            kind: self.model.kind(),
            shape: ModelShape::of(&self.model),
            taxonomy: self.taxonomy.clone(),
            config: self.config,
            seed: self.config.seed,
            optimizer_step: self.optimizer.as_ref().map(|s| s.step),
            tensors,
        }
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let manifest = serde_json::to_vec(&self.manifest())?;
        let mut out = Vec::with_capacity(16 + manifest.len());
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&(manifest.len() as u64).to_le_bytes());
        out.extend_from_slice(&manifest);
        let mut payload: Vec<&Tensor> = self.model.named_tensors().into_iter().map(|(_, t)| t).collect();
        if let Some(state) = &self.optimizer {
            payload.extend(&state.m);
            payload.extend(&state.v);
        }
        for t in payload {
            for v in t.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut cur = bytes;
        let mut magic = [0u8; 8];
        read_exact(&mut cur, &mut magic)?;
        if &magic != CHECKPOINT_MAGIC {
            return Err(Error::Checkpoint("not an affectlens checkpoint (bad magic)".into()));
        }
        let mut len = [0u8; 8];
        read_exact(&mut cur, &mut len)?;
        let len = usize::try_from(u64::from_le_bytes(len))
            .map_err(|_| Error::Checkpoint("manifest length overflows".into()))?;
        if len > cur.len() {
            return Err(Error::Checkpoint("truncated manifest".into()));
        }
        let (head, mut cur) = cur.split_at(len);
        let manifest: Manifest = serde_json::from_slice(head)?;
        if manifest.format_version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported format version {} (expected {CHECKPOINT_VERSION})",
                manifest.format_version
            )));
        }
        if manifest.kind != manifest.shape.kind() {
            return Err(Error::Checkpoint("manifest kind disagrees with its shape".into()));
        }

        let mut model = manifest.shape.skeleton();
        let names: Vec<String> = model.named_tensors().into_iter().map(|(n, _)| n).collect();
        let expect_optimizer = manifest.optimizer_step.is_some();
        let expected_count = names.len() * if expect_optimizer { 3 } else { 1 };
        if manifest.tensors.len() != expected_count {
            return Err(Error::Checkpoint(format!(
                "manifest lists {} tensors, expected {expected_count}",
                manifest.tensors.len()
            )));
        }

        let mut entries = manifest.tensors.iter();
        for (name, slot) in names.iter().zip(model.tensors_mut()) {
            let entry = entries.next().expect("count checked");
            if entry.name != *name {
                return Err(Error::Checkpoint(format!("expected tensor {name}, found {}", entry.name)));
            }
            slot.check_shape(&entry.shape, name)?;
            *slot = read_tensor(&mut cur, &entry.shape)?;
        }
        let optimizer = match manifest.optimizer_step {
            None => None,
            Some(step) => {
                let mut moments = [Vec::with_capacity(names.len()), Vec::with_capacity(names.len())];
                for (prefix, out) in ["adamw.m.", "adamw.v."].iter().zip(moments.iter_mut()) {
                    for name in &names {
                        let entry = entries.next().expect("count checked");
                        if entry.name != format!("{prefix}{name}") {
                            return Err(Error::Checkpoint(format!(
                                "expected tensor {prefix}{name}, found {}",
                                entry.name
                            )));
                        }
                        out.push(read_tensor(&mut cur, &entry.shape)?);
                    }
                }
                let [m, v] = moments;
                Some(AdamWState { step, m, v })
            }
        };
        if !cur.is_empty() {
            return Err(Error::Checkpoint(format!("{} trailing bytes", cur.len())));
        }
        Checkpoint::new(model, manifest.taxonomy, manifest.config, optimizer)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let bytes = self.to_bytes()?;
        let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&bytes).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

fn read_exact(cur: &mut &[u8], buf: &mut [u8]) -> Result<()> {
    cur.read_exact(buf)
        .map_err(|_| Error::Checkpoint("unexpected end of checkpoint".into()))
}

fn read_tensor(cur: &mut &[u8], shape: &[usize]) -> Result<Tensor> {
    let n: usize = shape.iter().product();
    let mut data = Vec::with_capacity(n);
    let mut word = [0u8; 8];
    for _ in 0..n {
        read_exact(cur, &mut word)?;
        data.push(f64::from_le_bytes(word));
    }
    Tensor::from_vec(shape, data)
}
