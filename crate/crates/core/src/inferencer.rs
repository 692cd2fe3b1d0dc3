//! Turning per-step pointer distributions into discrete tuples.
//!
//! Each decoding step yields start/end distributions for a trigger and an
//! argument. The trigger and argument spans must not share tokens, so the
//! search runs in both orders (trigger first, then argument; argument first,
//! then trigger) and keeps whichever gives the larger product of the four
//! selected probabilities.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::CorpusExample;
use crate::error::{Error, Result};
use crate::frame_codec::{
    canonicalize, decode_frames, EventRecord, EventTuple, LabelSchema, Span, SENTINEL_OFFSET,
};
use crate::model::EventModel;

/// A span together with `start_prob[b] * end_prob[e]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredSpan {
    pub span: Span,
    pub score: f64,
}

/// Finds `argmax start[b] * end[e]` over spans lying inside a single region
/// segment and avoiding every forbidden index. Ties go to the smaller `b`,
/// then the smaller `e`. Returns `None` when no span is feasible.
pub fn best_span(
    start: &[f64],
    end: &[f64],
    forbidden: &BTreeSet<usize>,
    region: &[Span],
    max_len: Option<usize>,
) -> Option<ScoredSpan> {
    let n = start.len().min(end.len());
    let mut best: Option<ScoredSpan> = None;
    let mut offer = |b: usize, e: usize| {
        let score = start[b] * end[e];
        let better = match best {
            None => true,
            Some(cur) => {
                score > cur.score || (score == cur.score && (b, e) < (cur.span.start, cur.span.end))
            }
        };
        if better {
            best = Some(ScoredSpan {
                span: Span::new(b, e),
                score,
            });
        }
    };
    for segment in region {
        if segment.start > segment.end || segment.start >= n {
            continue;
        }
        let last = segment.end.min(n - 1);
        // Maximal runs of allowed indices inside the segment.
        let mut run_start = None;
        for i in segment.start..=last + 1 {
            let allowed = i <= last && !forbidden.contains(&i);
            match (allowed, run_start) {
                (true, None) => run_start = Some(i),
                (false, Some(lo)) => {
                    scan_run(start, lo, i - 1, max_len, &mut offer);
                    run_start = None;
                }
                _ => {}
            }
        }
    }
    best
}

fn scan_run(
    start: &[f64],
    lo: usize,
    hi: usize,
    max_len: Option<usize>,
    offer: &mut impl FnMut(usize, usize),
) {
    match max_len {
        None => {
            // For a fixed end the best partner is the earliest maximal start seen so far.
            let mut best_b = lo;
            for e in lo..=hi {
                if start[e] > start[best_b] {
                    best_b = e;
                }
                offer(best_b, e);
            }
        }
        Some(cap) => {
            for e in lo..=hi {
                let first = lo.max((e + 1).saturating_sub(cap.max(1)));
                let mut best_b = first;
                for b in first..=e {
                    if start[b] > start[best_b] {
                        best_b = b;
                    }
                }
                offer(best_b, e);
            }
        }
    }
}

/// Host-side copy of one decoding step's six distributions for one sentence.
#[derive(Debug, Clone, PartialEq)]
pub struct StepDistributions {
    pub trigger_start: Vec<f64>,
    pub trigger_end: Vec<f64>,
    pub argument_start: Vec<f64>,
    pub argument_end: Vec<f64>,
    pub event_type: Vec<f64>,
    pub role: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InferenceOptions {
    pub max_trigger_len: Option<usize>,
    pub max_argument_len: Option<usize>,
}

impl Default for InferenceOptions {
    fn default() -> Self {
        InferenceOptions {
            max_trigger_len: None,
            max_argument_len: None,
        }
    }
}

/// Allowed trigger spans: the no-trigger sentinel alone, or real tokens.
pub fn trigger_region(n: usize) -> [Span; 2] {
    [Span::NO_TRIGGER, Span::new(SENTINEL_OFFSET, n - 1)]
}

/// Allowed argument spans: the no-argument sentinel alone, or real tokens.
pub fn argument_region(n: usize) -> [Span; 2] {
    [Span::NO_ARGUMENT, Span::new(SENTINEL_OFFSET, n - 1)]
}

fn tokens_of(span: Span) -> BTreeSet<usize> {
    (span.start..=span.end).collect()
}

/// Result of one search order: trigger, argument and the four-way product.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpanPair {
    pub trigger: Span,
    pub argument: Span,
    pub score: f64,
}

/// Trigger first, then the argument avoiding the trigger's tokens.
pub fn trigger_first(dist: &StepDistributions, n: usize, opts: &InferenceOptions) -> SpanPair {
    let trigger = best_span(
        &dist.trigger_start,
        &dist.trigger_end,
        &BTreeSet::new(),
        &trigger_region(n),
        opts.max_trigger_len,
    )
    .unwrap_or(ScoredSpan {
        span: Span::NO_TRIGGER,
        score: dist.trigger_start[0] * dist.trigger_end[0],
    });
    let argument = best_span(
        &dist.argument_start,
        &dist.argument_end,
        &tokens_of(trigger.span),
        &argument_region(n),
        opts.max_argument_len,
    )
    .unwrap_or(ScoredSpan {
        span: Span::NO_ARGUMENT,
        score: dist.argument_start[1] * dist.argument_end[1],
    });
    SpanPair {
        trigger: trigger.span,
        argument: argument.span,
        score: trigger.score * argument.score,
    }
}

/// Argument first, then the trigger avoiding the argument's tokens.
pub fn argument_first(dist: &StepDistributions, n: usize, opts: &InferenceOptions) -> SpanPair {
    let argument = best_span(
        &dist.argument_start,
        &dist.argument_end,
        &BTreeSet::new(),
        &argument_region(n),
        opts.max_argument_len,
    )
    .unwrap_or(ScoredSpan {
        span: Span::NO_ARGUMENT,
        score: dist.argument_start[1] * dist.argument_end[1],
    });
    let trigger = best_span(
        &dist.trigger_start,
        &dist.trigger_end,
        &tokens_of(argument.span),
        &trigger_region(n),
        opts.max_trigger_len,
    )
    .unwrap_or(ScoredSpan {
        span: Span::NO_TRIGGER,
        score: dist.trigger_start[0] * dist.trigger_end[0],
    });
    SpanPair {
        trigger: trigger.span,
        argument: argument.span,
        score: trigger.score * argument.score,
    }
}

/// Index of the largest value; the first one wins ties.
pub fn argmax(values: &[f64]) -> usize {
    values
        .iter()
        .enumerate()
        .fold(0, |best, (i, &v)| if v > values[best] { i } else { best })
}

/// Materializes one tuple from a step's distributions over a sentence of
/// length `n` (sentinels included).
///
/// The span pair comes from whichever search order scores higher (trigger
/// first on ties). A `(0,0)` trigger or a `NULL-EVT` type yields the null
/// tuple; a `(1,1)` argument forces role `NA`; a real argument takes the best
/// non-`NA` role.
pub fn infer_tuple(dist: &StepDistributions, n: usize, opts: &InferenceOptions) -> EventTuple {
    let a = trigger_first(dist, n, opts);
    let b = argument_first(dist, n, opts);
    let pair = if b.score > a.score { b } else { a };
    let event_type = argmax(&dist.event_type);
    if pair.trigger == Span::NO_TRIGGER || event_type == 0 {
        return EventTuple::NULL;
    }
    let role = if pair.argument == Span::NO_ARGUMENT {
        0
    } else {
        1 + argmax(&dist.role[1..])
    };
    EventTuple {
        trigger: pair.trigger,
        argument: pair.argument,
        event_type,
        role,
    }
}

/// Applies the stop rule to a sequence of per-step distributions: tuples are
/// read until the first null tuple, duplicates are dropped and the null tuple
/// itself is not returned.
pub fn assemble_tuples(
    steps: &[StepDistributions],
    n: usize,
    max_steps: usize,
    opts: &InferenceOptions,
) -> Vec<EventTuple> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for dist in steps.iter().take(max_steps) {
        let tuple = infer_tuple(dist, n, opts);
        if tuple.is_null() {
            break;
        }
        if seen.insert(tuple) {
            out.push(tuple);
        }
    }
    out
}

/// Extracts tuples for one sentence with a trained model.
pub fn extract_events(
    model: &EventModel,
    example: &CorpusExample,
    max_steps: usize,
    opts: &InferenceOptions,
) -> Result<Vec<EventTuple>> {
    Ok(extract_batch(model, std::slice::from_ref(example), max_steps, opts)?
        .pop()
        .unwrap_or_default())
}

/// Batched extraction; one tuple list per example, in input order.
pub fn extract_batch(
    model: &EventModel,
    examples: &[CorpusExample],
    max_steps: usize,
    opts: &InferenceOptions,
) -> Result<Vec<Vec<EventTuple>>> {
    const CHUNK: usize = 64;
    let mut out = Vec::with_capacity(examples.len());
    for chunk in examples.chunks(CHUNK) {
        let steps = model.decode_distributions(chunk, max_steps)?;
        for (example, steps) in chunk.iter().zip(steps) {
            out.push(assemble_tuples(&steps, example.sentence.len(), max_steps, opts));
        }
    }
    Ok(out)
}

/// Events of one sentence keyed by identifier; the prediction file format and
/// the gold side of scoring.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceEvents {
    pub id: String,
    pub events: Vec<EventRecord>,
}

impl SentenceEvents {
    pub fn from_tuples(
        id: &str,
        tuples: &[EventTuple],
        example: &CorpusExample,
        schema: &LabelSchema,
    ) -> Result<Self> {
        let decoded = decode_frames(tuples, &example.sentence, schema)?;
        Ok(SentenceEvents {
            id: id.to_string(),
            events: canonicalize(&decoded.iter().map(|e| e.to_record()).collect::<Vec<_>>()),
        })
    }

    pub fn gold(example: &CorpusExample, schema: &LabelSchema) -> Result<Self> {
        SentenceEvents::from_tuples(&example.id, &example.gold, example, schema)
    }
}

/// Predicts every example and converts to raw-token event records.
pub fn predict_corpus(
    model: &EventModel,
    examples: &[CorpusExample],
    max_steps: usize,
    opts: &InferenceOptions,
) -> Result<Vec<SentenceEvents>> {
    let tuples = extract_batch(model, examples, max_steps, opts)?;
    examples
        .iter()
        .zip(&tuples)
        .map(|(e, t)| SentenceEvents::from_tuples(&e.id, t, e, model.schema()))
        .collect()
}

/// Reads a prediction file, or any corpus file (extra fields are ignored;
/// a missing `id` becomes the 1-based line number).
pub fn read_events_file(path: &Path) -> Result<Vec<SentenceEvents>> {
    #[derive(Deserialize)]
    struct Line {
        id: Option<String>,
        #[serde(default)]
        events: Vec<EventRecord>,
    }
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parsed: Line = serde_json::from_str(line).map_err(|e| Error::Format {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(SentenceEvents {
            id: parsed.id.unwrap_or_else(|| (i + 1).to_string()),
            events: parsed.events,
        });
    }
    Ok(out)
}

pub fn write_events_file(path: &Path, sentences: &[SentenceEvents]) -> Result<()> {
    let mut out = Vec::new();
    for s in sentences {
        serde_json::to_writer(&mut out, s)?;
        out.push(b'\n');
    }
    fs::File::create(path)
        .and_then(|mut f| f.write_all(&out))
        .map_err(|e| Error::io(path, e))
}
