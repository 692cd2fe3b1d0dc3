//! Independent reference implementations used as test oracles.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use candle_core::{DType, Device, Tensor, Var};
use evtuple::corpus::{build_vocab, Batch, CorpusExample, CorpusRecord};
use evtuple::decoder::{DecoderConfig, StepOutput};
use evtuple::encoder::{ContextualConfig, EncoderConfig};
use evtuple::frame_codec::{ArgumentRecord, EventRecord, EventTuple, LabelSchema, Span};
use evtuple::inferencer::StepDistributions;
use evtuple::model::{EventModel, ModelConfig, Precision};
use evtuple::synth::SyntheticCorpus;
use evtuple::trainer::batch_loss;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

/// Exhaustive best span: every `(b, e)` inside one segment, no forbidden
/// token, length within `max_len`. Highest product wins, then smallest `(b, e)`.
pub fn brute_best_span(
    start: &[f64],
    end: &[f64],
    forbidden: &BTreeSet<usize>,
    region: &[Span],
    max_len: Option<usize>,
) -> Option<(Span, f64)> {
    let n = start.len();
    let mut best: Option<(Span, f64)> = None;
    for seg in region {
        for b in seg.start..=seg.end {
            for e in b..=seg.end {
                if e >= n || (b..=e).any(|i| forbidden.contains(&i)) {
                    continue;
                }
                if max_len.is_some_and(|m| e - b + 1 > m) {
                    continue;
                }
                let score = start[b] * end[e];
                let take = match best {
                    None => true,
                    Some((s, v)) => score > v || (score == v && (b, e) < (s.start, s.end)),
                };
                if take {
                    best = Some((Span::new(b, e), score));
                }
            }
        }
    }
    best
}

/// Exhaustive tuple inference over both search orders.
pub fn brute_infer_tuple(
    d: &StepDistributions,
    n: usize,
    max_trigger: Option<usize>,
    max_argument: Option<usize>,
) -> EventTuple {
    let triggers = [Span::new(0, 0), Span::new(2, n - 1)];
    let arguments = [Span::new(1, 1), Span::new(2, n - 1)];
    let tokens = |s: Span| (s.start..=s.end).collect::<BTreeSet<_>>();
    let none = BTreeSet::new();

    let t1 = brute_best_span(&d.trigger_start, &d.trigger_end, &none, &triggers, max_trigger).unwrap();
    let a1 = brute_best_span(&d.argument_start, &d.argument_end, &tokens(t1.0), &arguments, max_argument).unwrap();
    let a2 = brute_best_span(&d.argument_start, &d.argument_end, &none, &arguments, max_argument).unwrap();
    let t2 = brute_best_span(&d.trigger_start, &d.trigger_end, &tokens(a2.0), &triggers, max_trigger).unwrap();
    let (trigger, argument) = if t2.1 * a2.1 > t1.1 * a1.1 { (t2.0, a2.0) } else { (t1.0, a1.0) };

    let first_max = |v: &[f64]| {
        let mut k = 0;
        for i in 0..v.len() {
            if v[i] > v[k] {
                k = i;
            }
        }
        k
    };
    let event_type = first_max(&d.event_type);
    if trigger == Span::new(0, 0) || event_type == 0 {
        return EventTuple::NULL;
    }
    let role = if argument == Span::new(1, 1) { 0 } else { 1 + first_max(&d.role[1..]) };
    EventTuple {
        trigger,
        argument,
        event_type,
        role,
    }
}

/// A normalized distribution. Half the time weights are small integers, so
/// exact ties are common.
pub fn random_distribution(rng: &mut impl Rng, len: usize) -> Vec<f64> {
    let tied = rng.gen_bool(0.5);
    let mut w: Vec<f64> = (0..len)
        .map(|_| if tied { rng.gen_range(0..4) as f64 } else { rng.gen::<f64>() })
        .collect();
    if w.iter().all(|&x| x == 0.0) {
        w[rng.gen_range(0..len)] = 1.0;
    }
    let total: f64 = w.iter().sum();
    w.iter().map(|x| x / total).collect()
}

pub fn random_step(rng: &mut impl Rng, n: usize, p: usize, r: usize) -> StepDistributions {
    StepDistributions {
        trigger_start: random_distribution(rng, n),
        trigger_end: random_distribution(rng, n),
        argument_start: random_distribution(rng, n),
        argument_end: random_distribution(rng, n),
        event_type: random_distribution(rng, p + 1),
        role: random_distribution(rng, r + 1),
    }
}

/// Mean floored negative log-likelihood over the batch grid, one cell at a time.
pub fn looped_batch_loss(outputs: &[StepOutput], batch: &Batch, pad_tuples_in_loss: bool) -> f64 {
    let rows = |t: &candle_core::Tensor| -> Vec<Vec<f64>> {
        t.to_dtype(candle_core::DType::F64).unwrap().to_vec2().unwrap()
    };
    let nll = |p: f64| -(p.max(1e-12)).ln();
    let mut total = 0.0;
    let mut cells = 0.0;
    for (t, out) in outputs.iter().enumerate() {
        let (ts, te, as_, ae, et, ro) = (
            rows(&out.trigger_start),
            rows(&out.trigger_end),
            rows(&out.argument_start),
            rows(&out.argument_end),
            rows(&out.event_type),
            rows(&out.role),
        );
        for b in 0..batch.len() {
            let real = batch.tuple_mask[b * batch.max_tuples + t] == 1.0;
            if !pad_tuples_in_loss && !real {
                continue;
            }
            let g = batch.gold[b][t];
            total += nll(ts[b][g.trigger.start])
                + nll(te[b][g.trigger.end])
                + nll(as_[b][g.argument.start])
                + nll(ae[b][g.argument.end])
                + nll(et[b][g.event_type])
                + nll(ro[b][g.role]);
            cells += 1.0;
        }
    }
    total / f64::max(cells, 1.0)
}

pub fn toy_schema() -> LabelSchema {
    LabelSchema::new(
        ["Conflict:Attack", "Movement:Transport", "Life:Die"],
        ["Attacker", "Target", "Artifact", "Victim"],
    )
    .unwrap()
}

fn record(id: &str, tokens: &str, events: Vec<EventRecord>) -> CorpusRecord {
    let tokens: Vec<String> = tokens.split_whitespace().map(String::from).collect();
    let n = tokens.len();
    CorpusRecord {
        id: Some(id.into()),
        pos: vec!["NN".into(); n],
        dep: vec!["dep".into(); n],
        ent_bio: vec!["O".into(); n],
        tokens,
        events,
    }
}

fn event(trigger: [usize; 2], kind: &str, args: &[([usize; 2], &str)]) -> EventRecord {
    EventRecord {
        trigger: trigger.into(),
        event_type: kind.into(),
        arguments: args
            .iter()
            .map(|(s, r)| ArgumentRecord {
                span: (*s).into(),
                role: (*r).into(),
            })
            .collect(),
    }
}

/// Two five-token sentences (seven positions with the sentinels).
pub fn toy_examples(schema: &LabelSchema) -> Vec<CorpusExample> {
    let records = [
        record(
            "a",
            "rebels attacked the convoy yesterday",
            vec![event([1, 1], "Conflict:Attack", &[([0, 0], "Attacker"), ([2, 3], "Target")])],
        ),
        record(
            "b",
            "troops shipped tanks and died",
            vec![
                event([1, 1], "Movement:Transport", &[([2, 2], "Artifact")]),
                event([4, 4], "Life:Die", &[([0, 0], "Victim")]),
            ],
        ),
    ];
    records
        .iter()
        .map(|r| CorpusExample::from_record(r, r.id.clone().unwrap(), schema).unwrap())
        .collect()
}

/// Double precision, 8-wide frozen lookup table in place of the contextual
/// encoder, no discrete features, 6-wide pointer networks.
pub fn toy_config() -> ModelConfig {
    ModelConfig {
        encoder: EncoderConfig {
            d_ctx: 8,
            use_pos: false,
            use_dep: false,
            use_ent: false,
            use_char: false,
            dropout: 0.0,
            contextual: ContextualConfig {
                layers: 0,
                freeze: true,
                min_piece_count: 1,
                ..ContextualConfig::default()
            },
            ..EncoderConfig::default()
        },
        decoder: DecoderConfig {
            d_p: 6,
            attention_dim: None,
        },
        precision: Precision::F64,
        ..ModelConfig::default()
    }
}

pub fn toy_model(seed: u64) -> (EventModel, Vec<CorpusExample>) {
    let schema = toy_schema();
    let examples = toy_examples(&schema);
    let model = EventModel::for_corpus(&toy_config(), schema, &examples, seed).unwrap();
    (model, examples)
}

#[derive(Debug, Clone)]
pub struct GradientCheck {
    pub parameter: String,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub relative_error: f64,
}

fn flat(var: &Var) -> Vec<f64> {
    var.as_tensor().flatten_all().unwrap().to_vec1::<f64>().unwrap()
}

fn set_flat(var: &Var, values: Vec<f64>) {
    let shape = var.as_tensor().shape().clone();
    var.set(&Tensor::from_vec(values, shape, &Device::Cpu).unwrap()).unwrap();
}

/// Compares backprop gradients of `batch_loss` on the toy model with central
/// differences at `samples` randomly chosen trainable scalars.
pub fn gradient_check(seed: u64, samples: usize) -> Vec<GradientCheck> {
    let (model, examples) = toy_model(seed);
    assert!(examples.iter().all(|e| e.sentence.len() == 7));
    let steps = 3;
    let batch = Batch::new(examples, model.vocab(), steps).unwrap();
    let loss_at = || -> Tensor {
        let outputs = model.forward(&batch, steps, false).unwrap();
        batch_loss(&outputs, &batch, true).unwrap()
    };
    let grads = loss_at().backward().unwrap();

    let vars = model.trainable_vars();
    assert!(vars.iter().all(|(name, _)| !name.starts_with("encoder.ctx.")));
    let mut slots = Vec::new();
    for (i, (_, var)) in vars.iter().enumerate() {
        slots.extend((0..var.as_tensor().elem_count()).map(|j| (i, j)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let h = 1e-5;
    slots
        .choose_multiple(&mut rng, samples)
        .map(|&(i, j)| {
            let (name, var) = &vars[i];
            let analytic = grads
                .get(var.as_tensor())
                .map(|g| g.flatten_all().unwrap().to_vec1::<f64>().unwrap()[j])
                .unwrap_or(0.0);
            let original = flat(var);
            let mut shifted = original.clone();
            shifted[j] = original[j] + h;
            set_flat(var, shifted.clone());
            let up = loss_at().to_scalar::<f64>().unwrap();
            shifted[j] = original[j] - h;
            set_flat(var, shifted);
            let down = loss_at().to_scalar::<f64>().unwrap();
            set_flat(var, original);
            let numeric = (up - down) / (2.0 * h);
            GradientCheck {
                parameter: name.clone(),
                index: j,
                analytic,
                numeric,
                relative_error: (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6),
            }
        })
        .collect()
}

fn random_probs(rng: &mut impl Rng, rows: usize, cols: usize) -> Tensor {
    let mut data = Vec::with_capacity(rows * cols);
    for _ in 0..rows {
        let w: Vec<f64> = (0..cols).map(|_| rng.gen::<f64>().powi(3)).collect();
        let total: f64 = w.iter().sum();
        data.extend(w.iter().map(|x| x / total));
    }
    Tensor::from_vec(data, (rows, cols), &Device::Cpu).unwrap()
}

/// A random batch drawn from `corpus` with random (normalized) step outputs,
/// possibly with more steps than any sentence has tuples.
pub fn random_loss_case(rng: &mut impl Rng, corpus: &SyntheticCorpus) -> (Vec<StepOutput>, Batch) {
    let vocab = build_vocab(&corpus.examples).unwrap();
    let (p, r) = (corpus.schema.num_event_classes(), corpus.schema.num_role_classes());
    let size = rng.gen_range(1..=8);
    let chosen: Vec<_> = corpus.examples.choose_multiple(rng, size).cloned().collect();
    let most = chosen.iter().map(|e| e.num_tuples()).max().unwrap();
    let steps = most + rng.gen_range(0..3);
    let batch = Batch::new(chosen, &vocab, steps).unwrap();
    let b = batch.len();
    let outputs = (0..steps)
        .map(|_| StepOutput {
            trigger_start: random_probs(rng, b, batch.max_len),
            trigger_end: random_probs(rng, b, batch.max_len),
            argument_start: random_probs(rng, b, batch.max_len),
            argument_end: random_probs(rng, b, batch.max_len),
            event_type: random_probs(rng, b, p),
            role: random_probs(rng, b, r),
            ev: Tensor::zeros((b, 1), DType::F64, &Device::Cpu).unwrap(),
            arg: Tensor::zeros((b, 1), DType::F64, &Device::Cpu).unwrap(),
        })
        .collect();
    (outputs, batch)
}
