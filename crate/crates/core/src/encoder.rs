//! Token encoder.
//!
//! Each token's vector is the concatenation of a contextual embedding and the
//! enabled feature embeddings (POS, dependency relation, entity tag and a
//! character CNN), in that order. Contextual vectors come from a small
//! transformer over WordPiece pieces, pooled back to one vector per token.

use std::sync::Mutex;

use candle_core::{DType, Device, Module, Tensor, D};
use candle_nn::{Embedding, Linear};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Batch, FeatureVocab, MAX_WORD_LEN};
use crate::error::{Error, Result};
use crate::frame_codec::Sentence;
use crate::nn::{dropout, masked_softmax, LayerNorm, ParamBuilder};
use crate::wordpiece::PieceVocab;

/// Parameter-name prefix of the contextual encoder.
pub const CONTEXTUAL_PREFIX: &str = "ctx";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Pooling {
    /// Vector of the first piece of each token.
    #[default]
    First,
    /// Mean of the token's piece vectors.
    Mean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContextualConfig {
    /// Transformer layers over the piece embeddings; 0 leaves a plain lookup table.
    pub layers: usize,
    pub heads: usize,
    /// Feed-forward width inside each layer.
    pub ffn: usize,
    pub pooling: Pooling,
    /// Keep contextual parameters fixed at their initial values.
    pub freeze: bool,
    /// Minimum corpus count for a whole word to become a piece.
    pub min_piece_count: usize,
    pub lowercase: bool,
    /// Optional `vocab.txt`; otherwise the vocabulary is built from the training corpus.
    pub vocab_path: Option<String>,
}

impl Default for ContextualConfig {
    fn default() -> Self {
        ContextualConfig {
            layers: 2,
            heads: 12,
            ffn: 3072,
            pooling: Pooling::First,
            freeze: false,
            min_piece_count: 2,
            lowercase: false,
            vocab_path: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncoderConfig {
    pub d_ctx: usize,
    pub d_pos: usize,
    pub d_dep: usize,
    pub d_ent: usize,
    /// Character embedding width.
    pub d_char: usize,
    /// Character CNN output width.
    pub d_c: usize,
    pub cnn_filter: usize,
    pub use_pos: bool,
    pub use_dep: bool,
    pub use_ent: bool,
    pub use_char: bool,
    pub dropout: f64,
    pub contextual: ContextualConfig,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            d_ctx: 768,
            d_pos: 50,
            d_dep: 50,
            d_ent: 50,
            d_char: 50,
            d_c: 50,
            cnn_filter: 3,
            use_pos: true,
            use_dep: true,
            use_ent: true,
            use_char: true,
            dropout: 0.5,
            contextual: ContextualConfig::default(),
        }
    }
}

impl EncoderConfig {
    /// Width `d_h` of a token encoding.
    pub fn width(&self) -> usize {
        let mut w = self.d_ctx;
        if self.use_pos {
            w += self.d_pos;
        }
        if self.use_dep {
            w += self.d_dep;
        }
        if self.use_ent {
            w += self.d_ent;
        }
        if self.use_char {
            w += self.d_c;
        }
        w
    }

    pub fn validate(&self) -> Result<()> {
        let widths = [
            ("d_ctx", self.d_ctx),
            ("d_pos", self.d_pos),
            ("d_dep", self.d_dep),
            ("d_ent", self.d_ent),
            ("d_char", self.d_char),
            ("d_c", self.d_c),
            ("cnn_filter", self.cnn_filter),
        ];
        if let Some((name, _)) = widths.iter().find(|(_, w)| *w == 0) {
            return Err(Error::Config(format!("encoder.{name} must be positive")));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!(
                "encoder.dropout must be in [0, 1), got {}",
                self.dropout
            )));
        }
        let c = &self.contextual;
        if c.layers > 0 && (c.heads == 0 || self.d_ctx % c.heads != 0) {
            return Err(Error::Config(format!(
                "encoder.contextual.heads ({}) must divide d_ctx ({})",
                c.heads, self.d_ctx
            )));
        }
        if c.layers > 0 && c.ffn == 0 {
            return Err(Error::Config("encoder.contextual.ffn must be positive".into()));
        }
        Ok(())
    }
}

/// Per-token encodings of a padded batch.
#[derive(Debug, Clone)]
pub struct TokenEncodings {
    /// `[B, n, d_h]`; rows at padding positions are zero.
    pub h: Tensor,
    /// `[B, n]`, 1 for real tokens.
    pub mask: Tensor,
}

impl TokenEncodings {
    pub fn dims(&self) -> Result<(usize, usize, usize)> {
        Ok(self.h.dims3()?)
    }
}

#[derive(Debug)]
struct TransformerLayer {
    q: Linear,
    k: Linear,
    v: Linear,
    out: Linear,
    norm1: LayerNorm,
    ff1: Linear,
    ff2: Linear,
    norm2: LayerNorm,
    heads: usize,
}

impl TransformerLayer {
    fn new(b: &ParamBuilder, d: usize, heads: usize, ffn: usize) -> Result<Self> {
        Ok(TransformerLayer {
            q: b.linear(d, d, "q", true)?,
            k: b.linear(d, d, "k", true)?,
            v: b.linear(d, d, "v", true)?,
            out: b.linear(d, d, "out", true)?,
            norm1: LayerNorm::new(&b.pp("norm1"), d)?,
            ff1: b.linear(d, ffn, "ff1", true)?,
            ff2: b.linear(ffn, d, "ff2", true)?,
            norm2: LayerNorm::new(&b.pp("norm2"), d)?,
            heads,
        })
    }

    /// `x`: `[B, P, d]`, `mask`: `[B, P]`.
    fn forward(&self, x: &Tensor, mask: &Tensor) -> Result<Tensor> {
        let (b, p, d) = x.dims3()?;
        let dh = d / self.heads;
        let split = |t: Tensor| -> Result<Tensor> {
            Ok(t.reshape((b, p, self.heads, dh))?.transpose(1, 2)?.contiguous()?)
        };
        let q = split(self.q.forward(x)?)?;
        let k = split(self.k.forward(x)?)?;
        let v = split(self.v.forward(x)?)?;
        let scores = (q.matmul(&k.t()?)? / (dh as f64).sqrt())?;
        let weights = masked_softmax(&scores, &mask.unsqueeze(1)?.unsqueeze(1)?)?;
        let ctx = weights
            .matmul(&v)?
            .transpose(1, 2)?
            .contiguous()?
            .reshape((b, p, d))?;
        let x = self.norm1.forward(&(x + self.out.forward(&ctx)?)?)?;
        let ff = self.ff2.forward(&self.ff1.forward(&x)?.gelu()?)?;
        self.norm2.forward(&(x + ff)?)
    }
}

/// WordPiece embeddings with sinusoidal positions and transformer layers.
#[derive(Debug)]
pub struct PieceEncoder {
    vocab: PieceVocab,
    embed: Embedding,
    norm: LayerNorm,
    layers: Vec<TransformerLayer>,
    pooling: Pooling,
    freeze: bool,
    width: usize,
}

impl PieceEncoder {
    pub fn new(b: &ParamBuilder, vocab: PieceVocab, d: usize, config: &ContextualConfig) -> Result<Self> {
        let embed = b.embedding(vocab.len(), d, "embed")?;
        let norm = LayerNorm::new(&b.pp("norm"), d)?;
        let layers = (0..config.layers)
            .map(|i| TransformerLayer::new(&b.pp(&format!("layer{i}")), d, config.heads, config.ffn))
            .collect::<Result<Vec<_>>>()?;
        Ok(PieceEncoder {
            vocab,
            embed,
            norm,
            layers,
            pooling: config.pooling,
            freeze: config.freeze,
            width: d,
        })
    }

    pub fn vocab(&self) -> &PieceVocab {
        &self.vocab
    }

    /// Contextual vectors `[B, n_max, d_ctx]`; padding rows are zero.
    pub fn embed(&self, sentences: &[&Sentence], n_max: usize, dtype: DType, device: &Device) -> Result<Tensor> {
        let pieced: Vec<_> = sentences.iter().map(|s| self.vocab.tokenize(s)).collect();
        let b = sentences.len();
        let p_max = pieced.iter().map(|p| p.ids.len()).max().unwrap_or(0);
        let mut ids = vec![self.vocab.pad_id(); b * p_max];
        let mut piece_mask = vec![0f64; b * p_max];
        let mut pool = vec![0f64; b * n_max * p_max];
        for (row, p) in pieced.iter().enumerate() {
            ids[row * p_max..row * p_max + p.ids.len()].copy_from_slice(&p.ids);
            piece_mask[row * p_max..row * p_max + p.ids.len()].fill(1.0);
            for (tok, &(start, end)) in p.ranges.iter().enumerate() {
                let base = (row * n_max + tok) * p_max;
                match self.pooling {
                    Pooling::First => pool[base + start] = 1.0,
                    Pooling::Mean => {
                        let w = 1.0 / (end - start) as f64;
                        pool[base + start..base + end].fill(w);
                    }
                }
            }
        }
        let ids = Tensor::from_vec(ids, (b, p_max), device)?;
        let piece_mask = Tensor::from_vec(piece_mask, (b, p_max), device)?.to_dtype(dtype)?;
        let pool = Tensor::from_vec(pool, (b, n_max, p_max), device)?.to_dtype(dtype)?;
        let pieces = self.embed_pieces(&ids, &piece_mask)?;
        let out = pool.matmul(&pieces)?;
        Ok(if self.freeze { out.detach() } else { out })
    }

    /// Piece-level vectors `[B, P, d_ctx]` for padded piece ids.
    pub fn embed_pieces(&self, ids: &Tensor, piece_mask: &Tensor) -> Result<Tensor> {
        let mut x = self.embed.forward(ids)?;
        if self.layers.is_empty() {
            return Ok(x);
        }
        let (_, p, d) = x.dims3()?;
        let positions = sinusoidal(p, d, x.dtype(), x.device())?;
        x = self.norm.forward(&x.broadcast_add(&positions)?)?;
        for layer in &self.layers {
            x = layer.forward(&x, piece_mask)?;
        }
        Ok(x)
    }

    pub fn width(&self) -> usize {
        self.width
    }
}

fn sinusoidal(len: usize, d: usize, dtype: DType, device: &Device) -> Result<Tensor> {
    let mut table = vec![0f64; len * d];
    for pos in 0..len {
        for i in 0..d {
            let rate = 1.0 / 10000f64.powf((2 * (i / 2)) as f64 / d as f64);
            let angle = pos as f64 * rate;
            table[pos * d + i] = if i % 2 == 0 { angle.sin() } else { angle.cos() };
        }
    }
    Ok(Tensor::from_vec(table, (len, d), device)?.to_dtype(dtype)?)
}

/// Character CNN: embed, convolve with a window, max-pool over positions.
#[derive(Debug)]
pub struct CharCnn {
    embed: Embedding,
    conv: Linear,
    window: usize,
}

impl CharCnn {
    pub fn new(b: &ParamBuilder, chars: usize, d_char: usize, d_c: usize, window: usize) -> Result<Self> {
        Ok(CharCnn {
            embed: b.embedding(chars, d_char, "embed")?,
            conv: b.linear(window * d_char, d_c, "conv", true)?,
            window,
        })
    }

    /// `ids`: `[B, n, MAX_WORD_LEN]` character ids → `[B, n, d_c]`.
    pub fn forward(&self, ids: &Tensor) -> Result<Tensor> {
        let (b, n, len) = ids.dims3()?;
        let x = self.embed.forward(&ids.reshape((b * n, len))?)?;
        let left = (self.window - 1) / 2;
        let right = self.window - 1 - left;
        let x = x.pad_with_zeros(1, left, right)?;
        let windows = (0..self.window)
            .map(|j| x.narrow(1, j, len))
            .collect::<candle_core::Result<Vec<_>>>()?;
        let unfolded = Tensor::cat(&windows, D::Minus1)?;
        let conv = self.conv.forward(&unfolded)?;
        let pooled = conv.max(1)?;
        let d_c = pooled.dim(1)?;
        Ok(pooled.reshape((b, n, d_c))?)
    }
}

/// Full token encoder.
#[derive(Debug)]
pub struct Encoder {
    config: EncoderConfig,
    contextual: PieceEncoder,
    pos: Option<Embedding>,
    dep: Option<Embedding>,
    ent: Option<Embedding>,
    chars: Option<CharCnn>,
    dropout_rng: Mutex<ChaCha8Rng>,
}

impl Encoder {
    pub fn new(
        b: &ParamBuilder,
        config: &EncoderConfig,
        vocab: &FeatureVocab,
        pieces: PieceVocab,
        seed: u64,
    ) -> Result<Self> {
        config.validate()?;
        let contextual = PieceEncoder::new(&b.pp(CONTEXTUAL_PREFIX), pieces, config.d_ctx, &config.contextual)?;
        let feat = b.pp("feat");
        let pos = config
            .use_pos
            .then(|| feat.embedding(vocab.pos_index.len(), config.d_pos, "pos"))
            .transpose()?;
        let dep = config
            .use_dep
            .then(|| feat.embedding(vocab.dep_index.len(), config.d_dep, "dep"))
            .transpose()?;
        let ent = config
            .use_ent
            .then(|| feat.embedding(vocab.ent_index.len(), config.d_ent, "ent"))
            .transpose()?;
        let chars = config
            .use_char
            .then(|| {
                CharCnn::new(
                    &feat.pp("char"),
                    vocab.char_index.len(),
                    config.d_char,
                    config.d_c,
                    config.cnn_filter,
                )
            })
            .transpose()?;
        Ok(Encoder {
            config: config.clone(),
            contextual,
            pos,
            dep,
            ent,
            chars,
            dropout_rng: Mutex::new(ChaCha8Rng::seed_from_u64(seed.wrapping_add(1))),
        })
    }

    pub fn config(&self) -> &EncoderConfig {
        &self.config
    }

    pub fn width(&self) -> usize {
        self.config.width()
    }

    pub fn set_dropout(&mut self, p: f64) {
        self.config.dropout = p;
    }

    pub fn pieces(&self) -> &PieceVocab {
        self.contextual.vocab()
    }

    pub fn contextual(&self) -> &PieceEncoder {
        &self.contextual
    }

    /// Contextual part only, `[B, n, d_ctx]`.
    pub fn embed_contextual(&self, batch: &Batch, dtype: DType, device: &Device) -> Result<Tensor> {
        let sentences: Vec<&Sentence> = batch.examples.iter().map(|e| &e.sentence).collect();
        self.contextual.embed(&sentences, batch.max_len, dtype, device)
    }

    /// Character features `[B, n, d_c]`, or `None` when disabled.
    pub fn embed_chars(&self, batch: &Batch, device: &Device) -> Result<Option<Tensor>> {
        let Some(cnn) = &self.chars else {
            return Ok(None);
        };
        let ids = Tensor::from_slice(&batch.char_ids, (batch.len(), batch.max_len, MAX_WORD_LEN), device)?;
        Ok(Some(cnn.forward(&ids)?))
    }

    /// Encodes a batch. Dropout is applied to the fused vectors in training mode.
    pub fn encode_tokens(&self, batch: &Batch, train: bool, dtype: DType, device: &Device) -> Result<TokenEncodings> {
        let shape = (batch.len(), batch.max_len);
        let mut parts = vec![self.embed_contextual(batch, dtype, device)?];
        let tags = [
            (&self.pos, &batch.pos_ids),
            (&self.dep, &batch.dep_ids),
            (&self.ent, &batch.ent_ids),
        ];
        for (table, ids) in tags {
            if let Some(table) = table {
                parts.push(table.forward(&Tensor::from_slice(ids, shape, device)?)?);
            }
        }
        if let Some(chars) = self.embed_chars(batch, device)? {
            parts.push(chars);
        }
        let mask = Tensor::from_slice(&batch.token_mask, shape, device)?.to_dtype(dtype)?;
        let mut h = Tensor::cat(&parts, D::Minus1)?.broadcast_mul(&mask.unsqueeze(2)?)?;
        if train && self.config.dropout > 0.0 {
            h = dropout(&h, self.config.dropout, &self.dropout_rng)?;
        }
        Ok(TokenEncodings { h, mask })
    }
}
