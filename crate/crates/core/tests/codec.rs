use std::path::Path;

use evtuple::corpus::{load_corpus, read_records, CorpusExample};
use evtuple::frame_codec::{canonicalize, format_tuples, parse_tuples, LabelSchema};
use evtuple::synth::{generate_synthetic, SynthConfig};
use proptest::prelude::*;

fn fixture(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn reference_schema() -> LabelSchema {
    let text = std::fs::read_to_string(fixture("reference_schema.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

#[test]
fn reference_sentences_print_expected_tuples() {
    let schema = reference_schema();
    let examples = load_corpus(&fixture("reference_sentences.jsonl"), &schema).unwrap();
    assert_eq!(examples.len(), 2);
    assert_eq!(examples[0].sentence.tokens[7], "deploy");
    assert_eq!(examples[0].sentence.tokens[1], "[unused2]");
    assert_eq!(
        format_tuples(&examples[0].gold, &schema),
        "7 7 Movement:Transport 8 11 Artifact , 7 7 Movement:Transport 13 16 Destination"
    );
    assert_eq!(format_tuples(&examples[1].gold, &schema), "8 8 Conflict:Attack 1 1 NA");
}

#[test]
fn reference_sentences_round_trip() {
    let schema = reference_schema();
    let records = read_records(&fixture("reference_sentences.jsonl")).unwrap();
    for (id, record) in records {
        let example = CorpusExample::from_record(&record, id, &schema).unwrap();
        assert_eq!(example.gold_records(&schema).unwrap(), canonicalize(&record.events));
        let text = format_tuples(&example.gold, &schema);
        assert_eq!(parse_tuples(&text, &schema).unwrap(), example.gold);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn synthetic_records_round_trip(
        seed in any::<u64>(),
        multi in 0.0f64..1.0,
        shared in 0.0f64..1.0,
        overlap in 0.0f64..1.0,
    ) {
        let corpus = generate_synthetic(&SynthConfig {
            num_sentences: 25,
            multi_event_rate: multi,
            shared_arg_rate: shared,
            overlap_arg_rate: overlap,
            seed,
            ..SynthConfig::default()
        }).unwrap();
        for (record, example) in corpus.records.iter().zip(&corpus.examples) {
            prop_assert_eq!(example.gold_records(&corpus.schema).unwrap(), canonicalize(&record.events));
            let again = CorpusExample::from_record(
                &example.to_record(&corpus.schema).unwrap(),
                example.id.clone(),
                &corpus.schema,
            ).unwrap();
            prop_assert_eq!(&again, example);
        }
    }
}
