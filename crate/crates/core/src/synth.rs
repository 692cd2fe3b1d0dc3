//! Seeded generator of templated event sentences.
//!
//! Sentences are built from small lexicons so that every trigger and argument
//! position is known. Each event type owns a set of trigger verbs and an
//! ordered list of roles; the first role is taken by the clause subject and
//! the others are introduced by a role-specific preposition. The generator can
//! emit, at configured rates:
//!
//! * multi-event sentences (two coordinated clauses),
//! * a subject shared by both clauses (one argument, two events, possibly two
//!   roles),
//! * overlapping arguments: a nationality adjective inside an argument phrase
//!   that is itself an argument of the same event.
//!
//! `shared_arg_rate` and `overlap_arg_rate` are unconditional sentence rates;
//! a shared argument implies a multi-event sentence, so the effective shared
//! rate is capped at `multi_event_rate`.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{CorpusExample, CorpusRecord};
use crate::error::{Error, Result};
use crate::frame_codec::{ArgumentRecord, EventRecord, LabelSchema, Span};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub num_sentences: usize,
    pub num_event_types: usize,
    pub num_roles: usize,
    pub multi_event_rate: f64,
    pub shared_arg_rate: f64,
    pub overlap_arg_rate: f64,
    /// Among plain single-clause sentences: fraction with no event at all.
    pub no_event_rate: f64,
    /// Among plain single-clause sentences with an event: fraction whose
    /// trigger has no argument.
    pub bare_trigger_rate: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            num_sentences: 200,
            num_event_types: 5,
            num_roles: 6,
            multi_event_rate: 0.3,
            shared_arg_rate: 0.2,
            overlap_arg_rate: 0.0,
            no_event_rate: 0.1,
            bare_trigger_rate: 0.1,
            seed: 1,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_sentences == 0 || self.num_event_types == 0 || self.num_roles == 0 {
            return Err(Error::Config(
                "num_sentences, num_event_types and num_roles must be positive".into(),
            ));
        }
        for (name, rate) in [
            ("multi_event_rate", self.multi_event_rate),
            ("shared_arg_rate", self.shared_arg_rate),
            ("overlap_arg_rate", self.overlap_arg_rate),
            ("no_event_rate", self.no_event_rate),
            ("bare_trigger_rate", self.bare_trigger_rate),
        ] {
            if !(0.0..=1.0).contains(&rate) {
                return Err(Error::Config(format!("{name} = {rate} is outside [0, 1]")));
            }
        }
        Ok(())
    }
}

/// What the generator put into a sentence.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceFlags {
    pub multi_event: bool,
    pub shared_arg: bool,
    pub overlap_arg: bool,
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub schema: LabelSchema,
    pub records: Vec<CorpusRecord>,
    pub examples: Vec<CorpusExample>,
    pub flags: Vec<SentenceFlags>,
}

const EVENT_NAMES: &[&str] = &[
    "Movement:Transport",
    "Conflict:Attack",
    "Life:Die",
    "Contact:Meet",
    "Justice:Arrest-Jail",
    "Transaction:Transfer-Money",
    "Life:Injure",
    "Personnel:Elect",
];

const TRIGGERS: &[&[&str]] = &[
    &["deployed", "moved", "shipped"],
    &["attacked", "bombed", "invaded"],
    &["killed", "executed", "slew"],
    &["met", "visited", "hosted"],
    &["arrested", "detained", "jailed"],
    &["paid", "funded", "donated"],
    &["wounded", "injured", "hurt"],
    &["elected", "appointed", "chose"],
];

const ROLE_NAMES: &[&str] = &[
    "Agent",
    "Artifact",
    "Destination",
    "Victim",
    "Place",
    "Instrument",
    "Target",
    "Entity",
    "Giver",
    "Recipient",
    "Origin",
    "Attacker",
];

const MARKERS: &[&str] = &[
    "by", "with", "to", "in", "against", "at", "from", "for", "near", "toward", "into", "under",
];

const DETERMINERS: &[(&str, &str)] = &[
    ("the", "DET"),
    ("a", "DET"),
    ("several", "ADJ"),
    ("two", "NUM"),
    ("three", "NUM"),
];
const ADJECTIVES: &[&str] = &[
    "local", "young", "armed", "senior", "former", "large", "small", "unidentified",
];
const NATIONALITIES: &[&str] = &[
    "Chinese", "Iraqi", "French", "Russian", "Syrian", "Turkish", "Korean", "Mexican",
];
const NAMES: &[&str] = &["Ahmed", "Maria", "Chen", "Ivanov", "Smith", "Garcia", "Okafor"];
const CATEGORIES: &[(&str, &[&str])] = &[
    (
        "PER",
        &[
            "soldiers", "officials", "protesters", "journalists", "workers", "doctors", "students",
            "rebels", "villagers",
        ],
    ),
    (
        "ORG",
        &["company", "ministry", "army", "union", "council", "bank", "agency", "party"],
    ),
    (
        "LOC",
        &["city", "region", "village", "border", "capital", "port", "province", "valley"],
    ),
    ("WEA", &["rifles", "missiles", "bombs", "rockets", "grenades"]),
    ("VEH", &["trucks", "helicopters", "ships", "tanks", "planes"]),
];
const NON_EVENT_VERBS: &[&str] = &["said", "reported", "announced", "denied", "expected"];

fn event_name(k: usize) -> String {
    EVENT_NAMES
        .get(k)
        .map(|s| s.to_string())
        .unwrap_or_else(|| format!("Synthetic:Type{k}"))
}

fn role_name(k: usize) -> String {
    ROLE_NAMES
        .get(k)
        .map(|s| s.to_string())
        .unwrap_or_else(|| format!("Role{k}"))
}

fn marker(k: usize) -> String {
    MARKERS
        .get(k)
        .map(|s| s.to_string())
        .unwrap_or_else(|| format!("via{k}"))
}

fn trigger_words(k: usize) -> Vec<String> {
    match TRIGGERS.get(k) {
        Some(words) => words.iter().map(|w| w.to_string()).collect(),
        None => {
            const SYLLABLES: &[&str] = &["bra", "ko", "zun", "mel", "tar", "vo", "ish", "den"];
            (0..3)
                .map(|j| {
                    let a = SYLLABLES[k % SYLLABLES.len()];
                    let b = SYLLABLES[(k / SYLLABLES.len() + j + 1) % SYLLABLES.len()];
                    format!("{a}{b}{}ed", "r".repeat(j + 1))
                })
                .collect()
        }
    }
}

/// Roles attached to event type `k` (0-based, non-null), subject role first.
fn event_roles(k: usize, num_roles: usize) -> Vec<usize> {
    let mut roles = Vec::new();
    for j in 0..3.min(num_roles) {
        let r = (k + j) % num_roles;
        if !roles.contains(&r) {
            roles.push(r);
        }
    }
    roles
}

struct Builder {
    tokens: Vec<String>,
    pos: Vec<String>,
    dep: Vec<String>,
    ent: Vec<String>,
}

impl Builder {
    fn new() -> Self {
        Builder {
            tokens: Vec::new(),
            pos: Vec::new(),
            dep: Vec::new(),
            ent: Vec::new(),
        }
    }

    fn push(&mut self, word: &str, pos: &str, dep: &str, ent: &str) -> usize {
        self.tokens.push(word.to_string());
        self.pos.push(pos.to_string());
        self.dep.push(dep.to_string());
        self.ent.push(ent.to_string());
        self.tokens.len() - 1
    }

    fn words(&mut self, words: &[(&str, &str, &str)]) {
        for (w, p, d) in words {
            self.push(w, p, d, "O");
        }
    }
}

/// An entity phrase; `nested` is the nationality token, if any.
struct Phrase {
    span: Span,
    nested: Option<usize>,
}

fn entity_phrase(
    rng: &mut ChaCha8Rng,
    b: &mut Builder,
    head_dep: &str,
    subject: bool,
    with_nationality: bool,
) -> Phrase {
    let categories = if subject { &CATEGORIES[..2] } else { CATEGORIES };
    let (cat, nouns) = *categories.choose(rng).unwrap();
    if !with_nationality && cat == "PER" && rng.gen_bool(0.25) {
        let at = b.push(NAMES.choose(rng).unwrap(), "PROPN", head_dep, "B-PER");
        return Phrase {
            span: Span::new(at, at),
            nested: None,
        };
    }
    let (det, det_pos) = *DETERMINERS.choose(rng).unwrap();
    let start = b.push(det, det_pos, "det", &format!("B-{cat}"));
    let inside = format!("I-{cat}");
    if rng.gen_bool(0.4) {
        b.push(ADJECTIVES.choose(rng).unwrap(), "ADJ", "amod", &inside);
    }
    let nested = with_nationality
        .then(|| b.push(NATIONALITIES.choose(rng).unwrap(), "ADJ", "amod", &inside));
    let end = b.push(nouns.choose(rng).unwrap(), "NOUN", head_dep, &inside);
    Phrase {
        span: Span::new(start, end),
        nested,
    }
}

/// Plan for one clause: event type, whether it has a subject, which marked
/// roles follow the trigger.
struct Clause {
    event_type: usize,
    subject: bool,
    marked: Vec<usize>,
}

fn plan_clause(
    rng: &mut ChaCha8Rng,
    cfg: &SynthConfig,
    subject: Option<bool>,
    min_marked: usize,
) -> Clause {
    let event_type = rng.gen_range(0..cfg.num_event_types);
    let roles = event_roles(event_type, cfg.num_roles);
    let mut candidates = roles[1..].to_vec();
    candidates.shuffle(rng);
    let max_marked = candidates.len();
    let count = rng
        .gen_range(0..=max_marked.min(2))
        .max(min_marked.min(max_marked));
    candidates.truncate(count);
    Clause {
        event_type,
        subject: subject.unwrap_or_else(|| rng.gen_bool(0.7)),
        marked: candidates,
    }
}

/// Writes the post-subject part of a clause and returns its event record.
fn emit_clause(
    rng: &mut ChaCha8Rng,
    cfg: &SynthConfig,
    b: &mut Builder,
    clause: &Clause,
    subject: Option<&Span>,
    trigger_dep: &str,
    overlap: bool,
) -> EventRecord {
    let roles = event_roles(clause.event_type, cfg.num_roles);
    let words = trigger_words(clause.event_type);
    let at = b.push(words.choose(rng).unwrap(), "VERB", trigger_dep, "O");
    let mut arguments = Vec::new();
    if let Some(span) = subject {
        arguments.push(ArgumentRecord {
            span: *span,
            role: role_name(roles[0]),
        });
    }
    for (i, &role) in clause.marked.iter().enumerate() {
        b.push(&marker(role), "ADP", "prep", "O");
        let phrase = entity_phrase(rng, b, "pobj", false, overlap && i == 0);
        arguments.push(ArgumentRecord {
            span: phrase.span,
            role: role_name(role),
        });
        if let Some(nested) = phrase.nested {
            arguments.push(ArgumentRecord {
                span: Span::new(nested, nested),
                role: role_name(*roles.last().unwrap()),
            });
        }
    }
    EventRecord {
        trigger: Span::new(at, at),
        event_type: event_name(clause.event_type),
        arguments,
    }
}

fn emit_prefix(rng: &mut ChaCha8Rng, b: &mut Builder) {
    match rng.gen_range(0..8) {
        0 => b.words(&[("Yesterday", "NOUN", "npadvmod"), (",", "PUNCT", "punct")]),
        1 => b.words(&[
            ("Officials", "NOUN", "nsubj"),
            ("said", "VERB", "parataxis"),
            ("that", "SCONJ", "mark"),
        ]),
        2 => b.words(&[
            ("According", "VERB", "prep"),
            ("to", "ADP", "prep"),
            ("reports", "NOUN", "pobj"),
            (",", "PUNCT", "punct"),
        ]),
        3 => {
            b.push(NAMES.choose(rng).unwrap(), "PROPN", "nsubj", "B-PER");
            b.words(&[("said", "VERB", "parataxis"), ("that", "SCONJ", "mark")]);
        }
        _ => {}
    }
}

fn emit_subject(rng: &mut ChaCha8Rng, b: &mut Builder, wanted: bool, overlap: bool) -> Option<Phrase> {
    wanted.then(|| entity_phrase(rng, b, "nsubj", true, overlap))
}

fn generate_one(rng: &mut ChaCha8Rng, cfg: &SynthConfig) -> (Builder, Vec<EventRecord>, SentenceFlags) {
    let shared_rate = cfg.shared_arg_rate.min(cfg.multi_event_rate);
    let overlap = rng.gen_bool(cfg.overlap_arg_rate);
    let shared = rng.gen_bool(shared_rate);
    let multi = shared
        || (shared_rate < 1.0
            && rng.gen_bool(((cfg.multi_event_rate - shared_rate) / (1.0 - shared_rate)).clamp(0.0, 1.0)));
    let mut b = Builder::new();
    let mut events = Vec::new();
    emit_prefix(rng, &mut b);

    if multi {
        let mut first = plan_clause(rng, cfg, shared.then_some(true), usize::from(overlap));
        let second = plan_clause(rng, cfg, shared.then_some(false), 0);
        let subject_overlap = overlap && first.marked.is_empty();
        first.subject |= subject_overlap;
        let subject = emit_subject(rng, &mut b, first.subject, subject_overlap);
        let mut record = emit_clause(
            rng,
            cfg,
            &mut b,
            &first,
            subject.as_ref().map(|p| &p.span),
            "ROOT",
            overlap,
        );
        if let Some(nested) = subject.as_ref().and_then(|p| p.nested) {
            let roles = event_roles(first.event_type, cfg.num_roles);
            record.arguments.push(ArgumentRecord {
                span: Span::new(nested, nested),
                role: role_name(*roles.last().unwrap()),
            });
        }
        events.push(record);
        let subject = subject.map(|p| p.span);
        if shared {
            b.words(&[("and", "CCONJ", "cc")]);
            let mut record = emit_clause(rng, cfg, &mut b, &second, None, "conj", false);
            let roles = event_roles(second.event_type, cfg.num_roles);
            record.arguments.insert(
                0,
                ArgumentRecord {
                    span: subject.unwrap(),
                    role: role_name(roles[0]),
                },
            );
            events.push(record);
        } else {
            b.words(&[(",", "PUNCT", "punct"), ("while", "SCONJ", "mark")]);
            let subject = emit_subject(rng, &mut b, second.subject, false).map(|p| p.span);
            events.push(emit_clause(rng, cfg, &mut b, &second, subject.as_ref(), "advcl", false));
        }
    } else if !overlap && rng.gen_bool(cfg.no_event_rate) {
        entity_phrase(rng, &mut b, "nsubj", true, false);
        b.push(NON_EVENT_VERBS.choose(rng).unwrap(), "VERB", "ROOT", "O");
        if rng.gen_bool(0.5) {
            entity_phrase(rng, &mut b, "dobj", false, false);
        }
    } else if !overlap && rng.gen_bool(cfg.bare_trigger_rate) {
        b.words(&[("someone", "PRON", "nsubj")]);
        let event_type = rng.gen_range(0..cfg.num_event_types);
        let at = b.push(trigger_words(event_type).choose(rng).unwrap(), "VERB", "ROOT", "O");
        events.push(EventRecord {
            trigger: Span::new(at, at),
            event_type: event_name(event_type),
            arguments: Vec::new(),
        });
    } else {
        let clause = plan_clause(rng, cfg, None, usize::from(overlap));
        // With a single-role schema the only place for a nested argument is the subject.
        let subject_overlap = overlap && clause.marked.is_empty();
        let subject = emit_subject(rng, &mut b, clause.subject || subject_overlap, subject_overlap);
        let mut record = emit_clause(
            rng,
            cfg,
            &mut b,
            &clause,
            subject.as_ref().map(|p| &p.span),
            "ROOT",
            overlap,
        );
        if let Some(nested) = subject.and_then(|p| p.nested) {
            let roles = event_roles(clause.event_type, cfg.num_roles);
            record.arguments.push(ArgumentRecord {
                span: Span::new(nested, nested),
                role: role_name(*roles.last().unwrap()),
            });
        }
        events.push(record);
    }
    if rng.gen_bool(0.2) {
        b.words(&[("on", "ADP", "prep"), ("Monday", "PROPN", "pobj")]);
    }
    b.words(&[(".", "PUNCT", "punct")]);
    let flags = SentenceFlags {
        multi_event: multi,
        shared_arg: shared,
        overlap_arg: overlap,
    };
    (b, events, flags)
}

/// Generates a corpus; output is a pure function of `config`.
pub fn generate_synthetic(config: &SynthConfig) -> Result<SyntheticCorpus> {
    config.validate()?;
    let schema = LabelSchema::new(
        (0..config.num_event_types).map(event_name),
        (0..config.num_roles).map(role_name),
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut records = Vec::with_capacity(config.num_sentences);
    let mut examples = Vec::with_capacity(config.num_sentences);
    let mut flags = Vec::with_capacity(config.num_sentences);
    for i in 0..config.num_sentences {
        let (b, events, f) = generate_one(&mut rng, config);
        let id = format!("synth-{}-{i:05}", config.seed);
        let record = CorpusRecord {
            id: Some(id.clone()),
            tokens: b.tokens,
            pos: b.pos,
            dep: b.dep,
            ent_bio: b.ent,
            events,
        };
        examples.push(CorpusExample::from_record(&record, id, &schema)?);
        records.push(record);
        flags.push(f);
    }
    Ok(SyntheticCorpus {
        schema,
        records,
        examples,
        flags,
    })
}

/// Gold-derived properties of a record, used to cross-check generator flags.
pub fn observed_flags(record: &CorpusRecord) -> SentenceFlags {
    let triggers: std::collections::BTreeSet<_> =
        record.events.iter().map(|e| (e.trigger, &e.event_type)).collect();
    let spans: Vec<Span> = record
        .events
        .iter()
        .flat_map(|e| e.arguments.iter().map(|a| a.span))
        .collect();
    let shared = record.events.iter().enumerate().any(|(i, a)| {
        record.events[i + 1..].iter().any(|b| {
            b.trigger != a.trigger
                && a.arguments
                    .iter()
                    .any(|x| b.arguments.iter().any(|y| x.span == y.span))
        })
    });
    let overlap = spans
        .iter()
        .enumerate()
        .any(|(i, a)| spans[i + 1..].iter().any(|b| a != b && a.overlaps(b)));
    SentenceFlags {
        multi_event: triggers.len() > 1,
        shared_arg: shared,
        overlap_arg: overlap,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(n: usize, seed: u64) -> SynthConfig {
        SynthConfig {
            num_sentences: n,
            seed,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn seeded_generation_is_reproducible() {
        let a = generate_synthetic(&config(200, 1)).unwrap();
        let b = generate_synthetic(&config(200, 1)).unwrap();
        let dump = |c: &SyntheticCorpus| serde_json::to_string(&c.records).unwrap();
        assert_eq!(dump(&a), dump(&b));
        let c = generate_synthetic(&config(200, 2)).unwrap();
        assert_ne!(dump(&a), dump(&c));
    }

    #[test]
    fn zero_multi_rate_means_single_trigger() {
        let cfg = SynthConfig {
            multi_event_rate: 0.0,
            num_sentences: 300,
            ..SynthConfig::default()
        };
        let corpus = generate_synthetic(&cfg).unwrap();
        for record in &corpus.records {
            assert!(record.events.len() <= 1);
        }
    }

    #[test]
    fn flags_match_gold_structure() {
        let cfg = SynthConfig {
            num_sentences: 500,
            overlap_arg_rate: 0.3,
            ..SynthConfig::default()
        };
        let corpus = generate_synthetic(&cfg).unwrap();
        for (record, flags) in corpus.records.iter().zip(&corpus.flags) {
            let seen = observed_flags(record);
            assert_eq!(seen.multi_event, flags.multi_event, "{record:?}");
            assert_eq!(seen.overlap_arg, flags.overlap_arg, "{record:?}");
            assert_eq!(seen.shared_arg, flags.shared_arg, "{record:?}");
        }
    }

    #[test]
    fn overlap_rate_is_respected() {
        let cfg = SynthConfig {
            num_sentences: 1000,
            overlap_arg_rate: 0.3,
            ..SynthConfig::default()
        };
        let corpus = generate_synthetic(&cfg).unwrap();
        let frac = corpus.flags.iter().filter(|f| f.overlap_arg).count() as f64 / 1000.0;
        assert!((frac - 0.3).abs() <= 0.05, "overlap fraction {frac}");
    }

    #[test]
    fn small_schemas_still_generate() {
        for (types, roles) in [(1, 1), (1, 2), (12, 15)] {
            let cfg = SynthConfig {
                num_event_types: types,
                num_roles: roles,
                num_sentences: 200,
                overlap_arg_rate: 0.5,
                ..SynthConfig::default()
            };
            let corpus = generate_synthetic(&cfg).unwrap();
            for (record, flags) in corpus.records.iter().zip(&corpus.flags) {
                assert_eq!(observed_flags(record).overlap_arg, flags.overlap_arg, "{record:?}");
            }
        }
    }

    #[test]
    fn rejects_bad_rates() {
        let cfg = SynthConfig {
            multi_event_rate: 1.5,
            ..SynthConfig::default()
        };
        assert!(generate_synthetic(&cfg).is_err());
        assert!(generate_synthetic(&config(0, 1)).is_err());
    }
}
