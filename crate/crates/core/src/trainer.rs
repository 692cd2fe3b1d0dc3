//! Joint negative log-likelihood training.
//!
//! The loss of one tuple is the sum of six negative log-probabilities: trigger
//! start and end, argument start and end, event type and role, each floored
//! at `1e-12`. A batch loss is the mean over all `B × ET` (sentence, step)
//! cells, padding null tuples included unless configured otherwise.

use std::collections::HashMap;
use std::time::Instant;

use candle_core::{DType, Tensor, Var, D};
use serde::{Deserialize, Serialize};

use crate::corpus::{downsample_empty, make_batches, max_tuple_count, Batch, BatchOptions, CorpusExample};
use crate::decoder::StepOutput;
use crate::error::{Error, Result};
use crate::evaluator::{score, EvalReport, ScoreOptions};
use crate::frame_codec::EventTuple;
use crate::inferencer::{predict_corpus, InferenceOptions, SentenceEvents, StepDistributions};
use crate::model::EventModel;

/// Probability floor applied before taking logs.
pub const PROB_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    /// Dropout on the token encodings; overrides the encoder setting.
    pub dropout: f64,
    /// Decoder steps per sentence; defaults to the largest gold tuple count.
    pub max_tuples: Option<usize>,
    pub seed: u64,
    pub pad_tuples_in_loss: bool,
    /// Global gradient-norm ceiling; `None` or 0 disables clipping.
    pub clip_norm: Option<f64>,
    /// Fraction of event-less training sentences kept.
    pub empty_keep_rate: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 40,
            batch_size: 32,
            learning_rate: 1e-3,
            weight_decay: 1e-5,
            dropout: 0.5,
            max_tuples: None,
            seed: 1,
            pad_tuples_in_loss: true,
            clip_norm: Some(5.0),
            empty_keep_rate: 1.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 || self.max_tuples == Some(0) {
            return Err(Error::Config(
                "train.epochs, train.batch_size and train.max_tuples must be positive".into(),
            ));
        }
        if !(self.learning_rate > 0.0) || !(self.weight_decay >= 0.0) {
            return Err(Error::Config(
                "train.learning_rate must be positive and train.weight_decay non-negative".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config("train.dropout must be in [0, 1)".into()));
        }
        if !(0.0..=1.0).contains(&self.empty_keep_rate) {
            return Err(Error::Config("train.empty_keep_rate must be in [0, 1]".into()));
        }
        if self.clip_norm.is_some_and(|c| !(c >= 0.0)) {
            return Err(Error::Config("train.clip_norm must be non-negative".into()));
        }
        Ok(())
    }
}

fn floored_nll(p: f64) -> f64 {
    -p.max(PROB_FLOOR).ln()
}

/// Loss of one gold tuple under one step's distributions.
pub fn tuple_loss(dist: &StepDistributions, gold: &EventTuple) -> f64 {
    floored_nll(dist.trigger_start[gold.trigger.start])
        + floored_nll(dist.trigger_end[gold.trigger.end])
        + floored_nll(dist.argument_start[gold.argument.start])
        + floored_nll(dist.argument_end[gold.argument.end])
        + floored_nll(dist.event_type[gold.event_type])
        + floored_nll(dist.role[gold.role])
}

fn pick(probs: &Tensor, index: &[u32]) -> Result<Tensor> {
    let b = index.len();
    let idx = Tensor::from_slice(index, (b, 1), probs.device())?;
    let p = probs.gather(&idx, D::Minus1)?.squeeze(D::Minus1)?;
    Ok(p.maximum(PROB_FLOOR)?.log()?.neg()?)
}

/// Per-cell losses `[B, T]` for the first `T = outputs.len()` gold tuples.
pub fn cell_losses(outputs: &[StepOutput], gold: &[Vec<EventTuple>]) -> Result<Tensor> {
    let mut columns = Vec::with_capacity(outputs.len());
    for (t, out) in outputs.iter().enumerate() {
        let field = |f: fn(&EventTuple) -> usize| -> Vec<u32> {
            gold.iter().map(|g| f(&g[t]) as u32).collect()
        };
        let loss = (pick(&out.trigger_start, &field(|g| g.trigger.start))?
            + pick(&out.trigger_end, &field(|g| g.trigger.end))?
            + pick(&out.argument_start, &field(|g| g.argument.start))?
            + pick(&out.argument_end, &field(|g| g.argument.end))?
            + pick(&out.event_type, &field(|g| g.event_type))?
            + pick(&out.role, &field(|g| g.role))?)?;
        columns.push(loss);
    }
    Ok(Tensor::stack(&columns, 1)?)
}

/// Mean tuple loss over the batch grid. With `pad_tuples_in_loss` off, only
/// cells whose `tuple_mask` is 1 count.
pub fn batch_loss(outputs: &[StepOutput], batch: &Batch, pad_tuples_in_loss: bool) -> Result<Tensor> {
    let cells = cell_losses(outputs, &batch.gold)?;
    if pad_tuples_in_loss {
        return Ok(cells.mean_all()?);
    }
    let mask = Tensor::from_slice(&batch.tuple_mask, (batch.len(), batch.max_tuples), cells.device())?
        .to_dtype(cells.dtype())?;
    let real: f32 = batch.tuple_mask.iter().sum();
    Ok(((cells * mask)?.sum_all()? / f64::from(real.max(1.0)))?)
}

/// Adam with L2 regularization added to the gradient (not decoupled) and
/// optional global-norm clipping applied before the decay term.
pub struct Adam {
    vars: Vec<(String, Var)>,
    m: Vec<Tensor>,
    v: Vec<Tensor>,
    step: i32,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub clip_norm: Option<f64>,
    beta1: f64,
    beta2: f64,
    eps: f64,
}

impl Adam {
    pub fn new(vars: Vec<(String, Var)>, learning_rate: f64, weight_decay: f64, clip_norm: Option<f64>) -> Result<Self> {
        let zeros = |v: &Var| v.as_tensor().zeros_like();
        let m = vars.iter().map(|(_, v)| zeros(v)).collect::<candle_core::Result<_>>()?;
        let v = vars.iter().map(|(_, v)| zeros(v)).collect::<candle_core::Result<_>>()?;
        Ok(Adam {
            vars,
            m,
            v,
            step: 0,
            learning_rate,
            weight_decay,
            clip_norm,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        })
    }

    /// Backpropagates `loss` and applies one update. Returns the global
    /// gradient norm before clipping.
    pub fn backward_step(&mut self, loss: &Tensor) -> Result<f64> {
        let grads = loss.backward()?;
        let mut collected = Vec::with_capacity(self.vars.len());
        let mut sq = 0.0;
        for (_, var) in &self.vars {
            let g = grads.get(var.as_tensor()).map(Tensor::detach);
            if let Some(g) = &g {
                sq += g.to_dtype(DType::F64)?.sqr()?.sum_all()?.to_scalar::<f64>()?;
            }
            collected.push(g);
        }
        let norm = sq.sqrt();
        let scale = match self.clip_norm {
            Some(c) if norm > c => c / (norm + 1e-6),
            _ => 1.0,
        };
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step);
        let bc2 = 1.0 - self.beta2.powi(self.step);
        for (i, g) in collected.into_iter().enumerate() {
            let Some(g) = g else { continue };
            let var = &self.vars[i].1;
            let theta = var.as_tensor();
            let mut g = if scale != 1.0 { (g * scale)? } else { g };
            if self.weight_decay > 0.0 {
                g = (g + (theta * self.weight_decay)?)?;
            }
            let m = ((&self.m[i] * self.beta1)? + (&g * (1.0 - self.beta1))?)?;
            let v = ((&self.v[i] * self.beta2)? + (g.sqr()? * (1.0 - self.beta2))?)?;
            let update = ((&m / bc1)? / ((&v / bc2)?.sqrt()? + self.eps)?)?;
            var.set(&(theta - (update * self.learning_rate)?)?.detach())?;
            self.m[i] = m.detach();
            self.v[i] = v.detach();
        }
        Ok(norm)
    }
}

/// F1 at the four levels, as logged per epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelF1 {
    pub ti: f64,
    pub tc: f64,
    pub ai: f64,
    pub arc: f64,
}

impl From<&EvalReport> for LevelF1 {
    fn from(r: &EvalReport) -> Self {
        LevelF1 {
            ti: r.ti.f1,
            tc: r.tc.f1,
            ai: r.ai.f1,
            arc: r.arc.f1,
        }
    }
}

/// One line of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub mean_loss: f64,
    pub first_batch_loss: f64,
    pub batches: usize,
    pub dev: Option<LevelF1>,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub log: Vec<EpochLog>,
    /// Epoch whose parameters were kept (1-based).
    pub best_epoch: usize,
    pub best_dev_arc: Option<f64>,
    pub max_tuples: usize,
}

/// Encodes, decodes and evaluates a corpus with the current parameters.
pub fn evaluate(model: &EventModel, examples: &[CorpusExample], max_steps: usize) -> Result<EvalReport> {
    let predictions = predict_corpus(model, examples, max_steps, &InferenceOptions::default())?;
    let gold = examples
        .iter()
        .map(|e| SentenceEvents::gold(e, model.schema()))
        .collect::<Result<Vec<_>>>()?;
    score(&predictions, &gold, ScoreOptions::default())
}

/// Trains `model` in place and leaves it holding the parameters of the epoch
/// with the best dev ARC F1 (the last epoch when `dev` is empty).
/// `on_epoch` sees every log line as soon as it is produced.
pub fn train(
    model: &mut EventModel,
    train_set: &[CorpusExample],
    dev: &[CorpusExample],
    config: &TrainConfig,
    on_epoch: &mut dyn FnMut(&EpochLog),
) -> Result<TrainSummary> {
    config.validate()?;
    if train_set.is_empty() {
        return Err(Error::InvalidInput("training corpus is empty".into()));
    }
    model.set_dropout(config.dropout);
    let examples = downsample_empty(train_set.to_vec(), config.empty_keep_rate, config.seed);
    let max_tuples = config.max_tuples.unwrap_or_else(|| max_tuple_count(train_set));
    let max_steps = max_tuples.max(max_tuple_count(dev));
    let mut opt = Adam::new(
        model.trainable_vars(),
        config.learning_rate,
        config.weight_decay,
        config.clip_norm.filter(|c| *c > 0.0),
    )?;
    let mut log = Vec::with_capacity(config.epochs);
    let mut best: Option<(usize, f64, HashMap<String, Tensor>)> = None;
    for epoch in 1..=config.epochs {
        let started = Instant::now();
        let batches = make_batches(
            &examples,
            model.vocab(),
            BatchOptions {
                batch_size: config.batch_size,
                max_tuples,
                shuffle_seed: Some(config.seed.wrapping_mul(1_000_003).wrapping_add(epoch as u64)),
            },
        )?;
        let mut total = 0.0;
        let mut first = f64::NAN;
        for (index, batch) in batches.iter().enumerate() {
            let outputs = model.forward(batch, max_tuples, true)?;
            let loss = batch_loss(&outputs, batch, config.pad_tuples_in_loss)?;
            let value = loss.to_dtype(DType::F64)?.to_scalar::<f64>()?;
            if !value.is_finite() {
                return Err(Error::NonFiniteLoss {
                    epoch,
                    batch: index,
                    value,
                });
            }
            opt.backward_step(&loss)?;
            if index == 0 {
                first = value;
            }
            total += value;
        }
        let dev_report = if dev.is_empty() {
            None
        } else {
            Some(LevelF1::from(&evaluate(model, dev, max_steps)?))
        };
        let entry = EpochLog {
            epoch,
            mean_loss: total / batches.len() as f64,
            first_batch_loss: first,
            batches: batches.len(),
            dev: dev_report,
            seconds: started.elapsed().as_secs_f64(),
        };
        on_epoch(&entry);
        let arc = dev_report.map_or(f64::NEG_INFINITY, |d| d.arc);
        let improved = match &best {
            None => true,
            Some((_, b, _)) => arc > *b || dev_report.is_none(),
        };
        if improved {
            best = Some((epoch, arc, model.snapshot()?));
        }
        log.push(entry);
    }
    let (best_epoch, best_arc, params) = best.expect("at least one epoch ran");
    model.restore(&params)?;
    Ok(TrainSummary {
        log,
        best_epoch,
        best_dev_arc: (!dev.is_empty()).then_some(best_arc),
        max_tuples,
    })
}
