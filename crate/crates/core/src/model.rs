//! The complete extraction model and its checkpoint format.
//!
//! A checkpoint is a single safetensors file. Its header metadata carries a
//! format tag, a version number and a JSON blob with the label schema, the
//! feature and piece vocabularies and the model configuration; the tensors
//! are the model parameters by name.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use candle_core::{DType, Device, Tensor, Var};
use candle_nn::VarMap;
use safetensors::SafeTensors;
use serde::{Deserialize, Serialize};

use crate::corpus::{build_vocab, Batch, CorpusExample, FeatureVocab};
use crate::decoder::{Decoder, DecoderConfig, StepOutput};
use crate::encoder::{ContextualConfig, Encoder, EncoderConfig, TokenEncodings, CONTEXTUAL_PREFIX};
use crate::error::{Error, Result};
use crate::frame_codec::LabelSchema;
use crate::inferencer::StepDistributions;
use crate::nn::{rows_f64, ParamBuilder};
use crate::wordpiece::PieceVocab;

pub const CHECKPOINT_FORMAT: &str = "evtuple-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    F32,
    F64,
}

impl Precision {
    pub fn dtype(self) -> DType {
        match self {
            Precision::F32 => DType::F32,
            Precision::F64 => DType::F64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub encoder: EncoderConfig,
    pub decoder: DecoderConfig,
    pub precision: Precision,
    /// Compute device; only `"cpu"` is available in this build.
    pub device: String,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            encoder: EncoderConfig::default(),
            decoder: DecoderConfig::default(),
            precision: Precision::F32,
            device: "cpu".into(),
        }
    }
}

impl ModelConfig {
    /// A CPU-sized configuration: 192-wide single-layer piece encoder,
    /// 16-wide feature embeddings and 192-wide pointer networks.
    pub fn reduced() -> Self {
        ModelConfig {
            encoder: EncoderConfig {
                d_ctx: 192,
                d_pos: 16,
                d_dep: 16,
                d_ent: 16,
                d_char: 16,
                d_c: 16,
                contextual: ContextualConfig {
                    layers: 1,
                    heads: 4,
                    ffn: 384,
                    ..ContextualConfig::default()
                },
                ..EncoderConfig::default()
            },
            decoder: DecoderConfig {
                d_p: 192,
                attention_dim: None,
            },
            ..ModelConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.encoder.validate()?;
        self.decoder.validate()?;
        device_from_name(&self.device)?;
        Ok(())
    }
}

pub fn device_from_name(name: &str) -> Result<Device> {
    match name {
        "cpu" => Ok(Device::Cpu),
        other => Err(Error::Config(format!(
            "device {other:?} is not available; use \"cpu\""
        ))),
    }
}

/// Everything needed to rebuild a model apart from its weights.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct CheckpointMeta {
    schema: LabelSchema,
    vocab: FeatureVocab,
    pieces: PieceVocab,
    config: ModelConfig,
    seed: u64,
    /// Free-form provenance, typically the run configuration.
    extra: serde_json::Value,
}

pub struct EventModel {
    varmap: VarMap,
    schema: LabelSchema,
    vocab: FeatureVocab,
    config: ModelConfig,
    seed: u64,
    device: Device,
    encoder: Encoder,
    decoder: Decoder,
}

impl std::fmt::Debug for EventModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EventModel")
            .field("config", &self.config)
            .field("parameters", &self.num_parameters())
            .finish()
    }
}

impl EventModel {
    /// Builds a freshly initialized model.
    pub fn new(
        config: &ModelConfig,
        schema: LabelSchema,
        vocab: FeatureVocab,
        pieces: PieceVocab,
        seed: u64,
    ) -> Result<Self> {
        config.validate()?;
        let device = device_from_name(&config.device)?;
        let varmap = VarMap::new();
        let root = ParamBuilder::new(varmap.clone(), seed, config.precision.dtype(), device.clone());
        let encoder = Encoder::new(&root.pp("encoder"), &config.encoder, &vocab, pieces, seed)?;
        let decoder = Decoder::new(
            &root.pp("decoder"),
            &config.decoder,
            config.encoder.width(),
            schema.num_event_classes(),
            schema.num_role_classes(),
        )?;
        Ok(EventModel {
            varmap,
            schema,
            vocab,
            config: config.clone(),
            seed,
            device,
            encoder,
            decoder,
        })
    }

    /// Builds a model whose vocabularies come from a training corpus.
    pub fn for_corpus(
        config: &ModelConfig,
        schema: LabelSchema,
        train: &[CorpusExample],
        seed: u64,
    ) -> Result<Self> {
        let vocab = build_vocab(train)?;
        let ctx = &config.encoder.contextual;
        let pieces = match &ctx.vocab_path {
            Some(path) => PieceVocab::load(Path::new(path), ctx.lowercase)?,
            None => PieceVocab::build(
                train.iter().flat_map(|e| e.sentence.raw_tokens().iter().map(String::as_str)),
                ctx.min_piece_count,
                ctx.lowercase,
            ),
        };
        Self::new(config, schema, vocab, pieces, seed)
    }

    pub fn schema(&self) -> &LabelSchema {
        &self.schema
    }

    pub fn vocab(&self) -> &FeatureVocab {
        &self.vocab
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    /// Changes the dropout applied to token encodings in training mode.
    pub fn set_dropout(&mut self, p: f64) {
        self.config.encoder.dropout = p;
        self.encoder.set_dropout(p);
    }

    pub fn encoder(&self) -> &Encoder {
        &self.encoder
    }

    pub fn decoder(&self) -> &Decoder {
        &self.decoder
    }

    pub fn dtype(&self) -> DType {
        self.config.precision.dtype()
    }

    pub fn device(&self) -> &Device {
        &self.device
    }

    pub fn varmap(&self) -> &VarMap {
        &self.varmap
    }

    /// All parameters, sorted by name.
    pub fn named_vars(&self) -> Vec<(String, Var)> {
        let data = self.varmap.data().lock().expect("var map poisoned");
        let sorted: BTreeMap<_, _> = data.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
        sorted.into_iter().collect()
    }

    /// Parameters the optimizer should update, sorted by name. A frozen
    /// contextual encoder contributes none.
    pub fn trainable_vars(&self) -> Vec<(String, Var)> {
        let frozen = format!("encoder.{CONTEXTUAL_PREFIX}.");
        let freeze = self.config.encoder.contextual.freeze;
        self.named_vars()
            .into_iter()
            .filter(|(name, _)| !(freeze && name.starts_with(&frozen)))
            .collect()
    }

    pub fn num_parameters(&self) -> usize {
        self.named_vars().iter().map(|(_, v)| v.elem_count()).sum()
    }

    /// Encodes a batch of sentences.
    pub fn encode(&self, batch: &Batch, train: bool) -> Result<TokenEncodings> {
        self.encoder.encode_tokens(batch, train, self.dtype(), &self.device)
    }

    /// Runs `steps` decoder steps over a batch.
    pub fn forward(&self, batch: &Batch, steps: usize, train: bool) -> Result<Vec<StepOutput>> {
        let encodings = self.encode(batch, train)?;
        self.decoder.run(&encodings, steps)
    }

    /// Evaluation-mode distributions for `max_steps` steps, trimmed to each
    /// sentence's length.
    pub fn decode_distributions(
        &self,
        examples: &[CorpusExample],
        max_steps: usize,
    ) -> Result<Vec<Vec<StepDistributions>>> {
        let mut out: Vec<Vec<StepDistributions>> = vec![Vec::with_capacity(max_steps); examples.len()];
        if examples.is_empty() || max_steps == 0 {
            return Ok(out);
        }
        let batch = Batch::unlabeled(examples.to_vec(), &self.vocab);
        let lengths = batch.lengths();
        for step in self.forward(&batch, max_steps, false)? {
            let ts = rows_f64(&step.trigger_start)?;
            let te = rows_f64(&step.trigger_end)?;
            let as_ = rows_f64(&step.argument_start)?;
            let ae = rows_f64(&step.argument_end)?;
            let et = rows_f64(&step.event_type)?;
            let ro = rows_f64(&step.role)?;
            for (row, n) in lengths.iter().copied().enumerate() {
                out[row].push(StepDistributions {
                    trigger_start: ts[row][..n].to_vec(),
                    trigger_end: te[row][..n].to_vec(),
                    argument_start: as_[row][..n].to_vec(),
                    argument_end: ae[row][..n].to_vec(),
                    event_type: et[row].clone(),
                    role: ro[row].clone(),
                });
            }
        }
        Ok(out)
    }

    /// Deep copy of all parameter values.
    pub fn snapshot(&self) -> Result<HashMap<String, Tensor>> {
        self.named_vars()
            .into_iter()
            .map(|(name, var)| Ok((name, var.as_tensor().copy()?)))
            .collect()
    }

    /// Overwrites parameters from a snapshot or a loaded checkpoint. Names and
    /// shapes must match exactly.
    pub fn restore(&self, values: &HashMap<String, Tensor>) -> Result<()> {
        let vars = self.named_vars();
        if let Some(extra) = values.keys().find(|k| !vars.iter().any(|(n, _)| n == *k)) {
            return Err(Error::Incompatible(format!("unexpected parameter {extra}")));
        }
        for (name, var) in vars {
            let value = values
                .get(&name)
                .ok_or_else(|| Error::Incompatible(format!("missing parameter {name}")))?;
            if value.dims() != var.dims() {
                return Err(Error::Incompatible(format!(
                    "parameter {name} has shape {:?}, expected {:?}",
                    value.dims(),
                    var.dims()
                )));
            }
            var.set(&value.to_dtype(var.dtype())?.to_device(&self.device)?)?;
        }
        Ok(())
    }

    /// Writes a checkpoint. `extra` is stored verbatim for provenance.
    pub fn save(&self, path: &Path, extra: serde_json::Value) -> Result<()> {
        let meta = CheckpointMeta {
            schema: self.schema.clone(),
            vocab: self.vocab.clone(),
            pieces: self.encoder.pieces().clone(),
            config: self.config.clone(),
            seed: self.seed,
            extra,
        };
        let header = HashMap::from([
            ("format".to_string(), CHECKPOINT_FORMAT.to_string()),
            ("version".to_string(), CHECKPOINT_VERSION.to_string()),
            ("meta".to_string(), serde_json::to_string(&meta)?),
        ]);
        let tensors: Vec<(String, Tensor)> = self
            .named_vars()
            .into_iter()
            .map(|(n, v)| (n, v.as_tensor().clone()))
            .collect();
        let bytes = safetensors::serialize(tensors, Some(header))
            .map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display())))?;
        fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }

    /// Reads a checkpoint written by [`EventModel::save`]; returns the model
    /// and the stored provenance value.
    pub fn load(path: &Path) -> Result<(Self, serde_json::Value)> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let corrupt = |what: String| Error::Checkpoint(format!("{}: {what}", path.display()));
        let (_, metadata) = SafeTensors::read_metadata(&bytes).map_err(|e| corrupt(e.to_string()))?;
        let header = metadata
            .metadata()
            .as_ref()
            .ok_or_else(|| corrupt("no header metadata".into()))?;
        if header.get("format").map(String::as_str) != Some(CHECKPOINT_FORMAT) {
            return Err(corrupt("not a model checkpoint".into()));
        }
        let version = header.get("version").cloned().unwrap_or_default();
        if version != CHECKPOINT_VERSION.to_string() {
            return Err(Error::Incompatible(format!(
                "{} has checkpoint version {version}, this build reads version {CHECKPOINT_VERSION}",
                path.display()
            )));
        }
        let meta: CheckpointMeta = serde_json::from_str(
            header.get("meta").ok_or_else(|| corrupt("missing meta".into()))?,
        )
        .map_err(|e| corrupt(format!("bad meta: {e}")))?;
        let model = EventModel::new(&meta.config, meta.schema, meta.vocab, meta.pieces, meta.seed)?;
        let values = candle_core::safetensors::load_buffer(&bytes, &model.device)
            .map_err(|e| corrupt(e.to_string()))?;
        model.restore(&values)?;
        Ok((model, meta.extra))
    }

    /// Checks that a corpus can be processed by this model.
    pub fn check_schema(&self, schema: &LabelSchema) -> Result<()> {
        if schema != &self.schema {
            return Err(Error::Incompatible(
                "label schema differs from the one the model was trained with".into(),
            ));
        }
        Ok(())
    }
}
