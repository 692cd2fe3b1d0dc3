//! Corpus files, feature vocabularies and batching.
//!
//! A corpus file holds one JSON object per line:
//!
//! ```json
//! {"id": "s1", "tokens": ["He", "died"], "pos": ["PRON", "VERB"], "dep": ["nsubj", "ROOT"],
//!  "ent_bio": ["B-PER", "O"], "events": [{"trigger": [1, 1], "type": "Life:Die",
//!  "arguments": [{"span": [0, 0], "role": "Victim"}]}]}
//! ```
//!
//! Spans are 0-based, inclusive and relative to `tokens` (before sentinels are
//! added). `id` is optional and defaults to the 1-based line number.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame_codec::{
    augment_sentence, canonicalize, decode_frames, encode_frames, EventRecord, EventTuple,
    LabelSchema, Sentence, NO_ARGUMENT_TOKEN, NO_TRIGGER_TOKEN, SENTINEL_FEATURE,
};

/// Maximum characters per token seen by the character CNN.
pub const MAX_WORD_LEN: usize = 10;

/// One line of a corpus file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub tokens: Vec<String>,
    pub pos: Vec<String>,
    pub dep: Vec<String>,
    pub ent_bio: Vec<String>,
    #[serde(default)]
    pub events: Vec<EventRecord>,
}

/// A sentence paired with its gold tuple sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusExample {
    pub id: String,
    pub sentence: Sentence,
    pub gold: Vec<EventTuple>,
}

impl CorpusExample {
    pub fn from_record(record: &CorpusRecord, id: String, schema: &LabelSchema) -> Result<Self> {
        let sentence = augment_sentence(&record.tokens, &record.pos, &record.dep, &record.ent_bio)?;
        let gold = encode_frames(&sentence, &record.events, schema)?;
        Ok(CorpusExample { id, sentence, gold })
    }

    /// Gold events in raw-token coordinates, canonical order.
    pub fn gold_records(&self, schema: &LabelSchema) -> Result<Vec<EventRecord>> {
        let decoded = decode_frames(&self.gold, &self.sentence, schema)?;
        Ok(canonicalize(
            &decoded.iter().map(|e| e.to_record()).collect::<Vec<_>>(),
        ))
    }

    pub fn to_record(&self, schema: &LabelSchema) -> Result<CorpusRecord> {
        let raw = |v: &[String]| v[2..].to_vec();
        Ok(CorpusRecord {
            id: Some(self.id.clone()),
            tokens: raw(&self.sentence.tokens),
            pos: raw(&self.sentence.pos_tags),
            dep: raw(&self.sentence.dep_tags),
            ent_bio: raw(&self.sentence.ent_tags),
            events: self.gold_records(schema)?,
        })
    }

    /// Number of real (non-null) gold tuples.
    pub fn num_tuples(&self) -> usize {
        self.gold.len()
    }
}

fn read_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if !line.trim().is_empty() {
            lines.push((i + 1, line));
        }
    }
    Ok(lines)
}

/// Parses every non-blank line of a corpus file into records.
pub fn read_records(path: &Path) -> Result<Vec<(String, CorpusRecord)>> {
    read_lines(path)?
        .into_iter()
        .map(|(line, text)| {
            let record: CorpusRecord = serde_json::from_str(&text).map_err(|e| Error::Format {
                path: path.to_path_buf(),
                line,
                message: e.to_string(),
            })?;
            let id = record.id.clone().unwrap_or_else(|| line.to_string());
            Ok((id, record))
        })
        .collect()
}

/// Loads a corpus file, converting each record through the frame codec.
///
/// Invalid records are reported as format errors carrying the line number;
/// labels missing from the schema surface as schema errors.
pub fn load_corpus(path: &Path, schema: &LabelSchema) -> Result<Vec<CorpusExample>> {
    let lines = read_lines(path)?;
    let mut examples = Vec::with_capacity(lines.len());
    for (line, text) in lines {
        let at_line = |message: String| Error::Format {
            path: path.to_path_buf(),
            line,
            message,
        };
        let record: CorpusRecord =
            serde_json::from_str(&text).map_err(|e| at_line(e.to_string()))?;
        let id = record.id.clone().unwrap_or_else(|| line.to_string());
        match CorpusExample::from_record(&record, id, schema) {
            Ok(example) => examples.push(example),
            Err(Error::InvalidInput(message)) => return Err(at_line(message)),
            Err(Error::Schema(message)) => {
                return Err(Error::Schema(format!("{}:{line}: {message}", path.display())))
            }
            Err(other) => return Err(other),
        }
    }
    Ok(examples)
}

/// Writes examples back out in the corpus file format.
pub fn write_corpus(path: &Path, examples: &[CorpusExample], schema: &LabelSchema) -> Result<()> {
    let mut out = Vec::new();
    for example in examples {
        serde_json::to_writer(&mut out, &example.to_record(schema)?)?;
        out.push(b'\n');
    }
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&out).map_err(|e| Error::io(path, e))
}

pub const UNKNOWN_LABEL: &str = "<unk>";
pub const PAD_CHAR: &str = "<pad>";

/// Label→index map with reserved entries at the front. Lookups never fail.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct LabelIndex {
    labels: Vec<String>,
    index: BTreeMap<String, u32>,
    unknown: u32,
}

impl LabelIndex {
    fn build<'a>(reserved: &[&str], unknown: &str, seen: impl IntoIterator<Item = &'a str>) -> Self {
        let mut labels: Vec<String> = reserved.iter().map(|s| s.to_string()).collect();
        let extra: BTreeSet<&str> = seen
            .into_iter()
            .filter(|l| !reserved.contains(l))
            .collect();
        labels.extend(extra.into_iter().map(str::to_string));
        let mut index = LabelIndex::from(labels);
        index.unknown = index.index[unknown];
        index
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn get(&self, label: &str) -> u32 {
        self.index.get(label).copied().unwrap_or(self.unknown)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}

impl From<Vec<String>> for LabelIndex {
    fn from(labels: Vec<String>) -> Self {
        let index: BTreeMap<String, u32> = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.clone(), i as u32))
            .collect();
        let unknown = index
            .get(UNKNOWN_LABEL)
            .copied()
            .unwrap_or(0);
        LabelIndex {
            labels,
            index,
            unknown,
        }
    }
}

impl From<LabelIndex> for Vec<String> {
    fn from(index: LabelIndex) -> Self {
        index.labels
    }
}

/// Indices for the discrete token features.
///
/// Tag vocabularies reserve `<unk>` = 0 and `SENT` = 1. The character
/// vocabulary reserves `<pad>` = 0, `<unk>` = 1 and `SENT` = 2; sentinel
/// tokens are spelled as the single character `SENT`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureVocab {
    pub pos_index: LabelIndex,
    pub dep_index: LabelIndex,
    pub ent_index: LabelIndex,
    pub char_index: LabelIndex,
}

impl FeatureVocab {
    /// Character indices of a token, truncated or padded to [`MAX_WORD_LEN`].
    pub fn char_ids(&self, token: &str) -> [u32; MAX_WORD_LEN] {
        let mut ids = [0u32; MAX_WORD_LEN];
        if token == NO_TRIGGER_TOKEN || token == NO_ARGUMENT_TOKEN {
            ids[0] = self.char_index.get(SENTINEL_FEATURE);
            return ids;
        }
        let mut buf = [0u8; 4];
        for (slot, ch) in ids.iter_mut().zip(token.chars()) {
            *slot = self.char_index.get(ch.encode_utf8(&mut buf));
        }
        ids
    }
}

/// Builds feature vocabularies with sorted, deterministic indices.
pub fn build_vocab(examples: &[CorpusExample]) -> Result<FeatureVocab> {
    if examples.is_empty() {
        return Err(Error::InvalidInput(
            "cannot build a vocabulary from an empty corpus".into(),
        ));
    }
    let tags = |pick: fn(&Sentence) -> &Vec<String>| {
        LabelIndex::build(
            &[UNKNOWN_LABEL, SENTINEL_FEATURE],
            UNKNOWN_LABEL,
            examples
                .iter()
                .flat_map(move |e| pick(&e.sentence).iter().map(String::as_str)),
        )
    };
    let chars: BTreeSet<String> = examples
        .iter()
        .flat_map(|e| e.sentence.raw_tokens().iter())
        .flat_map(|t| t.chars().map(String::from))
        .collect();
    Ok(FeatureVocab {
        pos_index: tags(|s| &s.pos_tags),
        dep_index: tags(|s| &s.dep_tags),
        ent_index: tags(|s| &s.ent_tags),
        char_index: LabelIndex::build(
            &[PAD_CHAR, UNKNOWN_LABEL, SENTINEL_FEATURE],
            UNKNOWN_LABEL,
            chars.iter().map(String::as_str),
        ),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchOptions {
    pub batch_size: usize,
    pub max_tuples: usize,
    pub shuffle_seed: Option<u64>,
}

/// A padded mini-batch. Index tensors are row-major host vectors:
/// `[batch, max_len]` for tags and mask, `[batch, max_len, MAX_WORD_LEN]` for
/// characters and `[batch, max_tuples]` for the tuple mask.
#[derive(Debug, Clone)]
pub struct Batch {
    pub examples: Vec<CorpusExample>,
    pub max_len: usize,
    pub max_tuples: usize,
    pub token_mask: Vec<f32>,
    pub pos_ids: Vec<u32>,
    pub dep_ids: Vec<u32>,
    pub ent_ids: Vec<u32>,
    pub char_ids: Vec<u32>,
    /// Gold tuples right-padded with null tuples to `max_tuples`.
    pub gold: Vec<Vec<EventTuple>>,
    pub tuple_mask: Vec<f32>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn lengths(&self) -> Vec<usize> {
        self.examples.iter().map(|e| e.sentence.len()).collect()
    }

    /// Packs examples into one batch.
    pub fn new(examples: Vec<CorpusExample>, vocab: &FeatureVocab, max_tuples: usize) -> Result<Self> {
        if let Some(e) = examples.iter().find(|e| e.num_tuples() > max_tuples) {
            return Err(Error::Config(format!(
                "example {} has {} gold tuples but max_tuples is {max_tuples}",
                e.id,
                e.num_tuples()
            )));
        }
        Ok(Self::pack(examples, vocab, max_tuples))
    }

    /// Packs token inputs only; gold tuples are left empty. Used for inference.
    pub fn unlabeled(examples: Vec<CorpusExample>, vocab: &FeatureVocab) -> Self {
        Self::pack(examples, vocab, 0)
    }

    fn pack(examples: Vec<CorpusExample>, vocab: &FeatureVocab, max_tuples: usize) -> Self {
        let b = examples.len();
        let max_len = examples.iter().map(|e| e.sentence.len()).max().unwrap_or(0);
        let mut token_mask = vec![0f32; b * max_len];
        let mut pos_ids = vec![0u32; b * max_len];
        let mut dep_ids = vec![0u32; b * max_len];
        let mut ent_ids = vec![0u32; b * max_len];
        let mut char_ids = vec![0u32; b * max_len * MAX_WORD_LEN];
        let mut gold = Vec::with_capacity(b);
        let mut tuple_mask = vec![0f32; b * max_tuples];
        for (row, example) in examples.iter().enumerate() {
            let s = &example.sentence;
            for i in 0..s.len() {
                let at = row * max_len + i;
                token_mask[at] = 1.0;
                pos_ids[at] = vocab.pos_index.get(&s.pos_tags[i]);
                dep_ids[at] = vocab.dep_index.get(&s.dep_tags[i]);
                ent_ids[at] = vocab.ent_index.get(&s.ent_tags[i]);
                char_ids[at * MAX_WORD_LEN..(at + 1) * MAX_WORD_LEN]
                    .copy_from_slice(&vocab.char_ids(&s.tokens[i]));
            }
            if max_tuples > 0 {
                let mut padded = example.gold.clone();
                tuple_mask[row * max_tuples..row * max_tuples + padded.len()].fill(1.0);
                padded.resize(max_tuples, EventTuple::NULL);
                gold.push(padded);
            } else {
                gold.push(Vec::new());
            }
        }
        Batch {
            examples,
            max_len,
            max_tuples,
            token_mask,
            pos_ids,
            dep_ids,
            ent_ids,
            char_ids,
            gold,
            tuple_mask,
        }
    }
}

/// Splits examples into padded batches, optionally shuffled with a fixed seed.
pub fn make_batches(
    examples: &[CorpusExample],
    vocab: &FeatureVocab,
    options: BatchOptions,
) -> Result<Vec<Batch>> {
    if options.batch_size == 0 || options.max_tuples == 0 {
        return Err(Error::Config(
            "batch_size and max_tuples must be positive".into(),
        ));
    }
    if let Some(e) = examples.iter().find(|e| e.num_tuples() > options.max_tuples) {
        return Err(Error::Config(format!(
            "example {} has {} gold tuples but max_tuples is {}",
            e.id,
            e.num_tuples(),
            options.max_tuples
        )));
    }
    let mut order: Vec<usize> = (0..examples.len()).collect();
    if let Some(seed) = options.shuffle_seed {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    order
        .chunks(options.batch_size)
        .map(|chunk| {
            Batch::new(
                chunk.iter().map(|&i| examples[i].clone()).collect(),
                vocab,
                options.max_tuples,
            )
        })
        .collect()
}

/// Largest gold tuple count in a corpus.
pub fn max_tuple_count(examples: &[CorpusExample]) -> usize {
    examples.iter().map(|e| e.num_tuples()).max().unwrap_or(1)
}

/// Keeps every example with events and a seeded fraction of the event-less ones.
pub fn downsample_empty(examples: Vec<CorpusExample>, keep_rate: f64, seed: u64) -> Vec<CorpusExample> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    examples
        .into_iter()
        .filter(|e| e.gold != [EventTuple::NULL] || rng.gen::<f64>() < keep_rate)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame_codec::{ArgumentRecord, Span};

    fn schema() -> LabelSchema {
        LabelSchema::new(["Movement:Transport"], ["Artifact", "Destination"]).unwrap()
    }

    fn example(id: &str, pos: &[&str], events: Vec<EventRecord>) -> CorpusExample {
        let tokens: Vec<String> = (0..pos.len()).map(|i| format!("w{i}")).collect();
        let record = CorpusRecord {
            id: Some(id.into()),
            tokens,
            pos: pos.iter().map(|s| s.to_string()).collect(),
            dep: vec!["dep".into(); pos.len()],
            ent_bio: vec!["O".into(); pos.len()],
            events,
        };
        CorpusExample::from_record(&record, id.into(), &schema()).unwrap()
    }

    fn event(args: usize) -> EventRecord {
        EventRecord {
            trigger: Span::new(0, 0),
            event_type: "Movement:Transport".into(),
            arguments: (0..args)
                .map(|i| ArgumentRecord {
                    span: Span::new(i + 1, i + 1),
                    role: "Artifact".into(),
                })
                .collect(),
        }
    }

    #[test]
    fn vocab_counts_reserved_entries() {
        let ex = vec![example("a", &["NOUN", "VERB", "NOUN"], vec![])];
        let vocab = build_vocab(&ex).unwrap();
        assert_eq!(vocab.pos_index.len(), 4);
        assert_eq!(vocab.pos_index.get("<unk>"), 0);
        assert_eq!(vocab.pos_index.get("SENT"), 1);
        assert_eq!(vocab.pos_index.get("NOUN"), 2);
        assert_eq!(vocab.pos_index.get("VERB"), 3);
        assert_eq!(vocab.pos_index.get("ADJ"), 0);
        assert_eq!(vocab, build_vocab(&ex).unwrap());
        assert!(build_vocab(&[]).is_err());
    }

    #[test]
    fn char_ids_pad_and_truncate() {
        let ex = vec![example("a", &["NOUN"], vec![])];
        let vocab = build_vocab(&ex).unwrap();
        let ids = vocab.char_ids("w0");
        assert_ne!(ids[0], 0);
        assert_eq!(ids[2..], [0; 8]);
        assert_eq!(vocab.char_ids("[unused1]")[0], 2);
        let long = vocab.char_ids("w0w0w0w0w0zzzz");
        assert_eq!(long, vocab.char_ids("w0w0w0w0w0qq"));
        assert_eq!(vocab.char_ids("é")[0], 1);
    }

    #[test]
    fn batch_sizes() {
        let ex: Vec<_> = (0..70)
            .map(|i| example(&i.to_string(), &["NOUN"], vec![]))
            .collect();
        let vocab = build_vocab(&ex).unwrap();
        let opts = BatchOptions {
            batch_size: 32,
            max_tuples: 1,
            shuffle_seed: None,
        };
        let sizes: Vec<_> = make_batches(&ex, &vocab, opts)
            .unwrap()
            .iter()
            .map(Batch::len)
            .collect();
        assert_eq!(sizes, [32, 32, 6]);
    }

    #[test]
    fn gold_padding_and_mask() {
        let ex = vec![example("a", &["VERB", "NOUN", "NOUN"], vec![event(2)])];
        let vocab = build_vocab(&ex).unwrap();
        let batch = Batch::new(ex.clone(), &vocab, 4).unwrap();
        assert_eq!(batch.tuple_mask, [1.0, 1.0, 0.0, 0.0]);
        assert_eq!(batch.gold[0][2..], [EventTuple::NULL, EventTuple::NULL]);
        assert_eq!(batch.token_mask, [1.0; 5]);
        let err = Batch::new(ex, &vocab, 1).unwrap_err();
        assert!(matches!(err, Error::Config(m) if m.contains("example a")));
    }

    #[test]
    fn seeded_shuffle_is_stable() {
        let ex: Vec<_> = (0..20)
            .map(|i| example(&i.to_string(), &["NOUN"], vec![]))
            .collect();
        let vocab = build_vocab(&ex).unwrap();
        let ids = |seed| {
            let opts = BatchOptions {
                batch_size: 6,
                max_tuples: 1,
                shuffle_seed: Some(seed),
            };
            make_batches(&ex, &vocab, opts)
                .unwrap()
                .iter()
                .flat_map(|b| b.examples.iter().map(|e| e.id.clone()).collect::<Vec<_>>())
                .collect::<Vec<_>>()
        };
        assert_eq!(ids(3), ids(3));
        assert_ne!(ids(3), ids(4));
        let mut flat = ids(3);
        flat.sort();
        let mut all: Vec<_> = ex.iter().map(|e| e.id.clone()).collect();
        all.sort();
        assert_eq!(flat, all);
    }

    #[test]
    fn load_reports_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        let good = r#"{"tokens":["a","b"],"pos":["X","X"],"dep":["d","d"],"ent_bio":["O","O"],"events":[]}"#;
        let bad = r#"{"tokens":["a","b"],"pos":["X","X"],"dep":["d","d"],"ent_bio":["O","O"],"events":[{"trigger":[0,2],"type":"Movement:Transport","arguments":[]}]}"#;
        fs::write(&path, format!("{good}\n{bad}\n")).unwrap();
        match load_corpus(&path, &schema()) {
            Err(Error::Format { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected format error, got {other:?}"),
        }
        fs::write(&path, "").unwrap();
        assert!(load_corpus(&path, &schema()).unwrap().is_empty());
        fs::write(&path, format!("{good}\nnot json\n")).unwrap();
        assert!(matches!(
            load_corpus(&path, &schema()),
            Err(Error::Format { line: 2, .. })
        ));
        let unknown = good.replace(r#""events":[]"#, r#""events":[{"trigger":[0,0],"type":"Nope"}]"#);
        fs::write(&path, unknown).unwrap();
        assert!(matches!(load_corpus(&path, &schema()), Err(Error::Schema(_))));
    }

    #[test]
    fn write_then_load() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        let ex = vec![
            example("a", &["VERB", "NOUN", "NOUN"], vec![event(2)]),
            example("b", &["NOUN"], vec![]),
        ];
        write_corpus(&path, &ex, &schema()).unwrap();
        assert_eq!(load_corpus(&path, &schema()).unwrap(), ex);
    }

    #[test]
    fn downsampling_keeps_events() {
        let ex = vec![
            example("a", &["VERB", "NOUN"], vec![event(1)]),
            example("b", &["NOUN"], vec![]),
        ];
        let kept = downsample_empty(ex.clone(), 0.0, 1);
        assert_eq!(kept.len(), 1);
        assert_eq!(downsample_empty(ex, 1.0, 1).len(), 2);
    }
}
