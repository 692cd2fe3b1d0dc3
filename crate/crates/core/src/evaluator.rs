//! Trigger and argument scoring at four levels.
//!
//! * TI: trigger span matches a gold trigger span.
//! * TC: span and event type match.
//! * AI: argument span matches a gold argument of an event with the same type.
//! * ARC: additionally the role matches.
//!
//! Matching is one-to-one. Within a sentence, predicted and gold items are
//! grouped by the fields a level compares, and each group contributes
//! `min(#predicted, #gold)` correct items. Identical predictions count once.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame_codec::{EventRecord, Span};
use crate::inferencer::SentenceEvents;

pub const BREAKDOWN_RULES: [&str; 4] = ["event-count", "argument-count", "overlap", "roles-per-argument"];

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub predicted: usize,
    pub gold: usize,
    pub correct: usize,
}

impl Prf {
    pub fn from_counts(predicted: usize, gold: usize, correct: usize) -> Self {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(correct, predicted);
        let recall = ratio(correct, gold);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Prf {
            precision,
            recall,
            f1,
            predicted,
            gold,
            correct,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
struct Counts {
    predicted: usize,
    gold: usize,
    correct: usize,
}

impl std::ops::AddAssign for Counts {
    fn add_assign(&mut self, o: Counts) {
        self.predicted += o.predicted;
        self.gold += o.gold;
        self.correct += o.correct;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
struct LevelCounts {
    ti: Counts,
    tc: Counts,
    ai: Counts,
    arc: Counts,
}

impl std::ops::AddAssign for LevelCounts {
    fn add_assign(&mut self, o: LevelCounts) {
        self.ti += o.ti;
        self.tc += o.tc;
        self.ai += o.ai;
        self.arc += o.arc;
    }
}

/// Scores for one partition cell, with the sentences it covers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub ti: Prf,
    pub tc: Prf,
    pub ai: Prf,
    pub arc: Prf,
    pub sentences: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EvalReport {
    pub ti: Prf,
    pub tc: Prf,
    pub ai: Prf,
    pub arc: Prf,
    /// Rule name → cell name → scores. Empty cells are absent.
    pub breakdowns: BTreeMap<String, BTreeMap<String, CellReport>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ScoreOptions {
    /// Credit argument spans without requiring the event type to match.
    pub relaxed_arguments: bool,
}

type Trigger = (Span, String);
/// (event type, argument span, role)
type Argument = (String, Span, String);

fn triggers(events: &[EventRecord]) -> BTreeSet<Trigger> {
    events.iter().map(|e| (e.trigger, e.event_type.clone())).collect()
}

fn arguments(events: &[EventRecord]) -> BTreeSet<Argument> {
    events
        .iter()
        .flat_map(|e| {
            e.arguments
                .iter()
                .map(|a| (e.event_type.clone(), a.span, a.role.clone()))
        })
        .collect()
}

/// `Σ_groups min(#pred, #gold)` with items grouped by `key`.
fn grouped_matches<T, K: Ord>(pred: &BTreeSet<T>, gold: &BTreeSet<T>, key: impl Fn(&T) -> K) -> usize {
    let mut groups: BTreeMap<K, (usize, usize)> = BTreeMap::new();
    for item in pred {
        groups.entry(key(item)).or_default().0 += 1;
    }
    for item in gold {
        groups.entry(key(item)).or_default().1 += 1;
    }
    groups.values().map(|(p, g)| (*p).min(*g)).sum()
}

fn trigger_counts(pred: &BTreeSet<Trigger>, gold: &BTreeSet<Trigger>) -> (Counts, Counts) {
    let ti = Counts {
        predicted: pred.len(),
        gold: gold.len(),
        correct: grouped_matches(pred, gold, |t| t.0),
    };
    let tc = Counts {
        correct: pred.intersection(gold).count(),
        ..ti
    };
    (ti, tc)
}

fn argument_counts(pred: &BTreeSet<Argument>, gold: &BTreeSet<Argument>, options: ScoreOptions) -> (Counts, Counts) {
    let base = Counts {
        predicted: pred.len(),
        gold: gold.len(),
        correct: 0,
    };
    let (ai, arc) = if options.relaxed_arguments {
        (
            grouped_matches(pred, gold, |a| a.1),
            grouped_matches(pred, gold, |a| (a.1, a.2.clone())),
        )
    } else {
        (
            grouped_matches(pred, gold, |a| (a.0.clone(), a.1)),
            pred.intersection(gold).count(),
        )
    };
    (
        Counts { correct: ai, ..base },
        Counts { correct: arc, ..base },
    )
}

fn sentence_counts(pred: &[EventRecord], gold: &[EventRecord], options: ScoreOptions) -> LevelCounts {
    let (ti, tc) = trigger_counts(&triggers(pred), &triggers(gold));
    let (ai, arc) = argument_counts(&arguments(pred), &arguments(gold), options);
    LevelCounts { ti, tc, ai, arc }
}

fn prf(counts: Counts) -> Prf {
    Prf::from_counts(counts.predicted, counts.gold, counts.correct)
}

/// Pairs predictions with gold by identifier. Every identifier must occur on
/// both sides exactly once.
pub fn align<'a>(
    predictions: &'a [SentenceEvents],
    gold: &'a [SentenceEvents],
) -> Result<Vec<(&'a SentenceEvents, &'a SentenceEvents)>> {
    let mut by_id: BTreeMap<&str, &SentenceEvents> = BTreeMap::new();
    let mut duplicate = Vec::new();
    for p in predictions {
        if by_id.insert(p.id.as_str(), p).is_some() {
            duplicate.push(p.id.clone());
        }
    }
    let gold_ids: BTreeSet<&str> = gold.iter().map(|g| g.id.as_str()).collect();
    if gold_ids.len() != gold.len() {
        let mut seen = BTreeSet::new();
        duplicate.extend(gold.iter().filter(|g| !seen.insert(g.id.as_str())).map(|g| g.id.clone()));
    }
    let missing: Vec<&str> = gold_ids.iter().copied().filter(|id| !by_id.contains_key(id)).collect();
    let extra: Vec<&str> = by_id.keys().copied().filter(|id| !gold_ids.contains(id)).collect();
    if !missing.is_empty() || !extra.is_empty() || !duplicate.is_empty() {
        let mut msg = String::new();
        if !missing.is_empty() {
            let _ = write!(msg, "no prediction for: {}", missing.join(", "));
        }
        if !extra.is_empty() {
            if !msg.is_empty() {
                msg.push_str("; ");
            }
            let _ = write!(msg, "no gold for: {}", extra.join(", "));
        }
        if !duplicate.is_empty() {
            if !msg.is_empty() {
                msg.push_str("; ");
            }
            let _ = write!(msg, "duplicate identifiers: {}", duplicate.join(", "));
        }
        return Err(Error::Alignment(msg));
    }
    Ok(gold.iter().map(|g| (by_id[g.id.as_str()], g)).collect())
}

/// Micro-averaged scores over aligned sentences.
pub fn score(predictions: &[SentenceEvents], gold: &[SentenceEvents], options: ScoreOptions) -> Result<EvalReport> {
    let mut total = LevelCounts::default();
    for (p, g) in align(predictions, gold)? {
        total += sentence_counts(&p.events, &g.events, options);
    }
    Ok(EvalReport {
        ti: prf(total.ti),
        tc: prf(total.tc),
        ai: prf(total.ai),
        arc: prf(total.arc),
        breakdowns: BTreeMap::new(),
    })
}

/// Scores and adds the requested breakdowns.
pub fn score_with_breakdowns(
    predictions: &[SentenceEvents],
    gold: &[SentenceEvents],
    rules: &[String],
    options: ScoreOptions,
) -> Result<EvalReport> {
    for rule in rules {
        check_rule(rule)?;
    }
    let mut report = score(predictions, gold, options)?;
    for rule in rules {
        report
            .breakdowns
            .insert(rule.clone(), breakdown(predictions, gold, rule, options)?);
    }
    Ok(report)
}

fn check_rule(rule: &str) -> Result<()> {
    if BREAKDOWN_RULES.contains(&rule) {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "unknown breakdown {rule:?}; expected one of {}",
            BREAKDOWN_RULES.join(", ")
        )))
    }
}

fn count_cell(n: usize) -> &'static str {
    match n {
        0 => "0",
        1 => "1",
        _ => ">1",
    }
}

/// Sentence-level cell of a gold sentence under a partition rule.
pub fn sentence_cell(rule: &str, gold: &[EventRecord]) -> Result<&'static str> {
    check_rule(rule)?;
    Ok(match rule {
        "event-count" => count_cell(triggers(gold).len()),
        "argument-count" => {
            let most = gold.iter().map(|e| e.arguments.len()).max().unwrap_or(0);
            count_cell(most)
        }
        "overlap" => {
            if has_overlapping_arguments(gold) {
                "overlap"
            } else {
                "distinct"
            }
        }
        _ => unreachable!("argument-level rule"),
    })
}

/// True when two distinct gold argument spans share a token.
pub fn has_overlapping_arguments(events: &[EventRecord]) -> bool {
    let spans: BTreeSet<Span> = events
        .iter()
        .flat_map(|e| e.arguments.iter().map(|a| a.span))
        .collect();
    let spans: Vec<Span> = spans.into_iter().collect();
    spans
        .iter()
        .enumerate()
        .any(|(i, a)| spans[i + 1..].iter().any(|b| a.overlaps(b)))
}

/// Partitioned scores.
///
/// `event-count`, `argument-count` and `overlap` split sentences by their
/// gold annotation. `roles-per-argument` splits argument instances by the
/// number of distinct roles their span carries in the sentence (gold roles
/// for gold spans, predicted roles for spans absent from gold); its trigger
/// levels are empty.
pub fn breakdown(
    predictions: &[SentenceEvents],
    gold: &[SentenceEvents],
    rule: &str,
    options: ScoreOptions,
) -> Result<BTreeMap<String, CellReport>> {
    check_rule(rule)?;
    let pairs = align(predictions, gold)?;
    let mut cells: BTreeMap<String, (LevelCounts, Vec<String>)> = BTreeMap::new();
    for (p, g) in pairs {
        if rule == "roles-per-argument" {
            let pred = arguments(&p.events);
            let gold_args = arguments(&g.events);
            let roles = |set: &BTreeSet<Argument>| {
                let mut by_span: BTreeMap<Span, BTreeSet<String>> = BTreeMap::new();
                for (_, span, role) in set {
                    by_span.entry(*span).or_default().insert(role.clone());
                }
                by_span
            };
            let gold_roles = roles(&gold_args);
            let pred_roles = roles(&pred);
            let cell_of = |span: &Span| {
                let n = gold_roles
                    .get(span)
                    .or_else(|| pred_roles.get(span))
                    .map_or(0, BTreeSet::len);
                count_cell(n)
            };
            let mut split: BTreeMap<&str, (BTreeSet<Argument>, BTreeSet<Argument>)> = BTreeMap::new();
            for a in &pred {
                split.entry(cell_of(&a.1)).or_default().0.insert(a.clone());
            }
            for a in &gold_args {
                split.entry(cell_of(&a.1)).or_default().1.insert(a.clone());
            }
            for (cell, (pa, ga)) in split {
                let (ai, arc) = argument_counts(&pa, &ga, options);
                let entry = cells.entry(cell.to_string()).or_default();
                entry.0 += LevelCounts {
                    ai,
                    arc,
                    ..LevelCounts::default()
                };
                if entry.1.last() != Some(&g.id) {
                    entry.1.push(g.id.clone());
                }
            }
        } else {
            let cell = sentence_cell(rule, &g.events)?;
            let entry = cells.entry(cell.to_string()).or_default();
            entry.0 += sentence_counts(&p.events, &g.events, options);
            entry.1.push(g.id.clone());
        }
    }
    Ok(cells
        .into_iter()
        .map(|(cell, (c, sentences))| {
            (
                cell,
                CellReport {
                    ti: prf(c.ti),
                    tc: prf(c.tc),
                    ai: prf(c.ai),
                    arc: prf(c.arc),
                    sentences,
                },
            )
        })
        .collect())
}

impl EvalReport {
    /// Plain-text table: one row per (scope), P/R/F1 per level, in percent.
    pub fn to_table(&self) -> String {
        let mut rows = vec![("all".to_string(), [self.ti, self.tc, self.ai, self.arc])];
        for (rule, cells) in &self.breakdowns {
            for (cell, r) in cells {
                rows.push((format!("{rule}={cell}"), [r.ti, r.tc, r.ai, r.arc]));
            }
        }
        let width = rows.iter().map(|r| r.0.len()).max().unwrap_or(0).max(5);
        let mut out = String::new();
        let _ = write!(out, "{:<width$}", "scope");
        for level in ["TI", "TC", "AI", "ARC"] {
            let _ = write!(out, " | {:^20}", level);
        }
        out.push('\n');
        let _ = write!(out, "{:<width$}", "");
        for _ in 0..4 {
            let _ = write!(out, " | {:>6} {:>6} {:>6}", "P", "R", "F1");
        }
        out.push('\n');
        out.push_str(&"-".repeat(width + 4 * 23));
        out.push('\n');
        for (name, levels) in rows {
            let _ = write!(out, "{name:<width$}");
            for m in levels {
                let _ = write!(
                    out,
                    " | {:>6.2} {:>6.2} {:>6.2}",
                    100.0 * m.precision,
                    100.0 * m.recall,
                    100.0 * m.f1
                );
            }
            out.push('\n');
        }
        out
    }
}
