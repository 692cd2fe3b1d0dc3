mod common;

use std::collections::BTreeSet;

use common::fixture;
use evtuple::evaluator::{breakdown, score, EvalReport, ScoreOptions, BREAKDOWN_RULES};
use evtuple::frame_codec::{ArgumentRecord, EventRecord, Span};
use evtuple::inferencer::{read_events_file, SentenceEvents};
use evtuple::synth::{generate_synthetic, SynthConfig};
use proptest::prelude::*;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-12
}

#[test]
fn hand_counted_fixture() {
    let pred = read_events_file(&fixture("score_pred.jsonl")).unwrap();
    let gold = read_events_file(&fixture("score_gold.jsonl")).unwrap();
    let r = score(&pred, &gold, ScoreOptions::default()).unwrap();
    assert_eq!((r.ti.predicted, r.ti.gold, r.ti.correct), (3, 4, 2));
    assert!(close(r.ti.precision, 2.0 / 3.0) && close(r.ti.recall, 0.5) && close(r.ti.f1, 4.0 / 7.0));
    assert!(close(r.tc.precision, 1.0 / 3.0) && close(r.tc.recall, 0.25) && close(r.tc.f1, 2.0 / 7.0));
    assert_eq!((r.ai.predicted, r.ai.gold, r.ai.correct), (2, 2, 1));
    assert_eq!(r.arc.correct, 1);

    let relaxed = score(&pred, &gold, ScoreOptions { relaxed_arguments: true }).unwrap();
    assert_eq!(relaxed.ai.correct, 2);
}

fn all_ones(r: &EvalReport) -> bool {
    [r.ti, r.tc, r.ai, r.arc]
        .iter()
        .all(|p| p.precision == 1.0 && p.recall == 1.0 && p.f1 == 1.0)
}

#[test]
fn gold_against_itself_is_perfect() {
    let gold = read_events_file(&fixture("score_gold.jsonl")).unwrap();
    assert!(all_ones(&score(&gold, &gold, ScoreOptions::default()).unwrap()));
}

#[test]
fn empty_predictions_score_zero() {
    let gold = read_events_file(&fixture("score_gold.jsonl")).unwrap();
    let empty: Vec<_> = gold
        .iter()
        .map(|g| SentenceEvents {
            id: g.id.clone(),
            events: Vec::new(),
        })
        .collect();
    let r = score(&empty, &gold, ScoreOptions::default()).unwrap();
    for p in [r.ti, r.tc, r.ai, r.arc] {
        assert_eq!((p.precision, p.recall, p.f1), (0.0, 0.0, 0.0));
    }
}

#[test]
fn misaligned_ids_are_listed() {
    let gold = read_events_file(&fixture("score_gold.jsonl")).unwrap();
    let err = score(&gold[..2], &gold, ScoreOptions::default()).unwrap_err().to_string();
    assert!(err.contains("s3"), "{err}");
}

fn arb_events(n: usize) -> impl Strategy<Value = Vec<EventRecord>> {
    let span = (0..n).prop_flat_map(move |s| (Just(s), s..n)).prop_map(|(s, e)| Span::new(s, e));
    let arg = (span.clone(), prop::sample::select(vec!["A", "B", "C"]))
        .prop_map(|(span, role)| ArgumentRecord { span, role: role.into() });
    let event = (span, prop::sample::select(vec!["X", "Y"]), prop::collection::vec(arg, 0..3)).prop_map(
        |(trigger, t, arguments)| EventRecord {
            trigger,
            event_type: t.into(),
            arguments,
        },
    );
    prop::collection::vec(event, 0..4)
}

fn corpus(sentences: Vec<Vec<EventRecord>>) -> Vec<SentenceEvents> {
    sentences
        .into_iter()
        .enumerate()
        .map(|(i, events)| SentenceEvents {
            id: format!("s{i}"),
            events,
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn scores_are_consistent(
        pairs in prop::collection::vec((arb_events(6), arb_events(6)), 1..6),
        relaxed in any::<bool>(),
    ) {
        let (pred, gold): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
        let (pred, gold) = (corpus(pred), corpus(gold));
        let options = ScoreOptions { relaxed_arguments: relaxed };
        let r = score(&pred, &gold, options).unwrap();
        for p in [r.ti, r.tc, r.ai, r.arc] {
            prop_assert!(p.correct <= p.predicted.min(p.gold));
            let expected = if p.precision + p.recall == 0.0 { 0.0 } else {
                2.0 * p.precision * p.recall / (p.precision + p.recall)
            };
            prop_assert!((p.f1 - expected).abs() < 1e-12);
        }
        prop_assert!(r.tc.correct <= r.ti.correct);
        prop_assert!(r.arc.correct <= r.ai.correct);
        let own = score(&gold, &gold, options).unwrap();
        prop_assert!([own.ti, own.tc, own.ai, own.arc].iter().all(|p| p.gold == 0 || p.f1 == 1.0));

        for rule in ["event-count", "argument-count", "overlap"] {
            let cells = breakdown(&pred, &gold, rule, options).unwrap();
            let mut seen = BTreeSet::new();
            let mut ti = 0;
            for cell in cells.values() {
                for id in &cell.sentences {
                    prop_assert!(seen.insert(id.clone()), "{} in two cells", id);
                }
                ti += cell.ti.correct;
            }
            prop_assert_eq!(seen.len(), gold.len());
            prop_assert_eq!(ti, r.ti.correct);
        }
        let per_arg = breakdown(&pred, &gold, "roles-per-argument", options).unwrap();
        prop_assert_eq!(per_arg.values().map(|c| c.arc.correct).sum::<usize>(), r.arc.correct);
        prop_assert_eq!(per_arg.values().map(|c| c.ai.gold).sum::<usize>(), r.ai.gold);
    }
}

#[test]
fn synthetic_breakdowns_follow_generator_flags() {
    let corpus = generate_synthetic(&SynthConfig {
        num_sentences: 300,
        overlap_arg_rate: 0.3,
        seed: 23,
        ..SynthConfig::default()
    })
    .unwrap();
    let gold: Vec<SentenceEvents> = corpus
        .examples
        .iter()
        .map(|e| SentenceEvents::gold(e, &corpus.schema).unwrap())
        .collect();
    let flagged = |f: fn(&evtuple::synth::SentenceFlags) -> bool| -> BTreeSet<String> {
        corpus
            .examples
            .iter()
            .zip(&corpus.flags)
            .filter(|(_, flags)| f(flags))
            .map(|(e, _)| e.id.clone())
            .collect()
    };
    let cells = breakdown(&gold, &gold, "event-count", ScoreOptions::default()).unwrap();
    let multi: BTreeSet<String> = cells[">1"].sentences.iter().cloned().collect();
    assert_eq!(multi, flagged(|f| f.multi_event));
    let cells = breakdown(&gold, &gold, "overlap", ScoreOptions::default()).unwrap();
    let overlap: BTreeSet<String> = cells["overlap"].sentences.iter().cloned().collect();
    assert_eq!(overlap, flagged(|f| f.overlap_arg));
    assert!(!overlap.is_empty());
    for rule in BREAKDOWN_RULES {
        assert!(breakdown(&gold, &gold, rule, ScoreOptions::default()).unwrap().values().all(|c| {
            [c.ti, c.tc, c.ai, c.arc].iter().all(|p| p.gold == 0 || p.f1 == 1.0)
        }));
    }
}
