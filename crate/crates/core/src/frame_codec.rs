//! Event-frame data model.
//!
//! Every sentence is prefixed with two sentinel tokens. Position 0 (`[unused1]`)
//! stands in for "no trigger" and position 1 (`[unused2]`) for "no argument",
//! so each (trigger, argument) pair of an event can be written as a flat
//! 6-tuple of indices and labels:
//!
//! ```text
//! s_tr e_tr EventType s_ar e_ar Role
//! ```
//!
//! A trigger without arguments points its argument at `(1,1)` with role `NA`;
//! a sentence without events is the single null tuple `0 0 NULL-EVT 1 1 NA`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const NO_TRIGGER_TOKEN: &str = "[unused1]";
pub const NO_ARGUMENT_TOKEN: &str = "[unused2]";
/// Feature label given to both sentinel positions.
pub const SENTINEL_FEATURE: &str = "SENT";
pub const NULL_EVENT: &str = "NULL-EVT";
pub const NULL_ROLE: &str = "NA";
/// Number of sentinel tokens prepended to every sentence.
pub const SENTINEL_OFFSET: usize = 2;

/// Ordered event-type and role inventories. Index 0 of each is the null label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SchemaFile", into = "SchemaFile")]
pub struct LabelSchema {
    event_types: Vec<String>,
    role_types: Vec<String>,
    event_index: BTreeMap<String, usize>,
    role_index: BTreeMap<String, usize>,
}

/// On-disk form of a [`LabelSchema`]: the non-null labels only.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct SchemaFile {
    event_types: Vec<String>,
    role_types: Vec<String>,
}

impl TryFrom<SchemaFile> for LabelSchema {
    type Error = Error;

    fn try_from(file: SchemaFile) -> Result<Self> {
        LabelSchema::new(file.event_types, file.role_types)
    }
}

impl From<LabelSchema> for SchemaFile {
    fn from(schema: LabelSchema) -> Self {
        SchemaFile {
            event_types: schema.event_types[1..].to_vec(),
            role_types: schema.role_types[1..].to_vec(),
        }
    }
}

impl LabelSchema {
    /// Builds a schema from the non-null labels; `NULL-EVT` and `NA` are
    /// inserted at index 0. A leading null label in the input is accepted and
    /// not duplicated.
    pub fn new<E, R>(event_types: E, role_types: R) -> Result<Self>
    where
        E: IntoIterator,
        E::Item: Into<String>,
        R: IntoIterator,
        R::Item: Into<String>,
    {
        let (event_types, event_index) = Self::index(NULL_EVENT, event_types, "event type")?;
        let (role_types, role_index) = Self::index(NULL_ROLE, role_types, "role")?;
        Ok(LabelSchema {
            event_types,
            role_types,
            event_index,
            role_index,
        })
    }

    fn index<I>(
        null: &str,
        labels: I,
        what: &str,
    ) -> Result<(Vec<String>, BTreeMap<String, usize>)>
    where
        I: IntoIterator,
        I::Item: Into<String>,
    {
        let mut names = vec![null.to_string()];
        let mut index = BTreeMap::from([(null.to_string(), 0)]);
        for (i, label) in labels.into_iter().map(Into::into).enumerate() {
            if i == 0 && label == null {
                continue;
            }
            if label.is_empty() {
                return Err(Error::Schema(format!("empty {what} label")));
            }
            if index.insert(label.clone(), names.len()).is_some() {
                return Err(Error::Schema(format!("duplicate {what} label {label:?}")));
            }
            names.push(label);
        }
        Ok((names, index))
    }

    /// Collects a schema from every label used in the given records, sorted.
    pub fn from_records<'a>(records: impl IntoIterator<Item = &'a EventRecord>) -> Result<Self> {
        let mut events = BTreeSet::new();
        let mut roles = BTreeSet::new();
        for record in records {
            events.insert(record.event_type.clone());
            for arg in &record.arguments {
                roles.insert(arg.role.clone());
            }
        }
        events.remove(NULL_EVENT);
        roles.remove(NULL_ROLE);
        LabelSchema::new(events, roles)
    }

    /// Number of event classes including `NULL-EVT` (p + 1).
    pub fn num_event_classes(&self) -> usize {
        self.event_types.len()
    }

    /// Number of role classes including `NA` (r + 1).
    pub fn num_role_classes(&self) -> usize {
        self.role_types.len()
    }

    pub fn event_types(&self) -> &[String] {
        &self.event_types
    }

    pub fn role_types(&self) -> &[String] {
        &self.role_types
    }

    pub fn event_id(&self, label: &str) -> Result<usize> {
        self.event_index
            .get(label)
            .copied()
            .ok_or_else(|| Error::Schema(format!("unknown event type {label:?}")))
    }

    pub fn role_id(&self, label: &str) -> Result<usize> {
        self.role_index
            .get(label)
            .copied()
            .ok_or_else(|| Error::Schema(format!("unknown role {label:?}")))
    }

    pub fn event_name(&self, id: usize) -> &str {
        &self.event_types[id]
    }

    pub fn role_name(&self, id: usize) -> &str {
        &self.role_types[id]
    }
}

/// A tokenized sentence with both sentinels prepended and per-token features.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub tokens: Vec<String>,
    pub pos_tags: Vec<String>,
    pub dep_tags: Vec<String>,
    pub ent_tags: Vec<String>,
}

impl Sentence {
    /// Length including the two sentinels.
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.len() <= SENTINEL_OFFSET
    }

    /// The original tokens without sentinels.
    pub fn raw_tokens(&self) -> &[String] {
        &self.tokens[SENTINEL_OFFSET..]
    }

    /// Joins tokens `start..=end` with single spaces.
    pub fn phrase(&self, span: Span) -> String {
        self.tokens[span.start..=span.end].join(" ")
    }
}

/// Prepends the sentinel tokens and checks feature alignment.
pub fn augment_sentence<S: AsRef<str>>(
    raw_tokens: &[S],
    pos: &[S],
    dep: &[S],
    ent: &[S],
) -> Result<Sentence> {
    if raw_tokens.is_empty() {
        return Err(Error::InvalidInput("sentence has no tokens".into()));
    }
    for (name, feature) in [("pos", pos), ("dep", dep), ("ent_bio", ent)] {
        if feature.len() != raw_tokens.len() {
            return Err(Error::InvalidInput(format!(
                "{name} has {} labels for {} tokens",
                feature.len(),
                raw_tokens.len()
            )));
        }
    }
    let with_sentinels = |first: &str, second: &str, rest: &[S]| -> Vec<String> {
        [first, second]
            .into_iter()
            .map(str::to_string)
            .chain(rest.iter().map(|s| s.as_ref().to_string()))
            .collect()
    };
    Ok(Sentence {
        tokens: with_sentinels(NO_TRIGGER_TOKEN, NO_ARGUMENT_TOKEN, raw_tokens),
        pos_tags: with_sentinels(SENTINEL_FEATURE, SENTINEL_FEATURE, pos),
        dep_tags: with_sentinels(SENTINEL_FEATURE, SENTINEL_FEATURE, dep),
        ent_tags: with_sentinels(SENTINEL_FEATURE, SENTINEL_FEATURE, ent),
    })
}

/// Inclusive token span `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "[usize; 2]", into = "[usize; 2]")]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub const NO_TRIGGER: Span = Span { start: 0, end: 0 };
    pub const NO_ARGUMENT: Span = Span { start: 1, end: 1 };

    pub const fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end + 1 - self.start
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.start <= other.end && other.start <= self.end
    }

    pub fn contains(&self, index: usize) -> bool {
        self.start <= index && index <= self.end
    }

    pub fn shift_up(self, by: usize) -> Span {
        Span::new(self.start + by, self.end + by)
    }

    pub fn shift_down(self, by: usize) -> Span {
        Span::new(self.start - by, self.end - by)
    }
}

impl From<[usize; 2]> for Span {
    fn from([start, end]: [usize; 2]) -> Self {
        Span { start, end }
    }
}

impl From<Span> for [usize; 2] {
    fn from(span: Span) -> Self {
        [span.start, span.end]
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.start, self.end)
    }
}

/// One (trigger, argument) frame in sentinel-shifted coordinates.
///
/// Field order matches the canonical sort key of gold sequences: trigger span,
/// argument span, then the two labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EventTuple {
    pub trigger: Span,
    pub argument: Span,
    pub event_type: usize,
    pub role: usize,
}

impl EventTuple {
    pub const NULL: EventTuple = EventTuple {
        trigger: Span::NO_TRIGGER,
        argument: Span::NO_ARGUMENT,
        event_type: 0,
        role: 0,
    };

    pub fn is_null(&self) -> bool {
        self.trigger == Span::NO_TRIGGER || self.event_type == 0
    }

    pub fn has_argument(&self) -> bool {
        self.argument != Span::NO_ARGUMENT
    }

    /// Checks every structural invariant against a sentence of length `n`.
    pub fn validate(&self, n: usize) -> Result<()> {
        let real = |s: &Span| s.start >= SENTINEL_OFFSET && s.start <= s.end && s.end < n;
        let fail = |why: &str| Err(Error::InvalidInput(format!("tuple {self:?}: {why}")));
        if self.trigger == Span::NO_TRIGGER {
            if self.event_type != 0 || self.argument != Span::NO_ARGUMENT || self.role != 0 {
                return fail("null trigger must form the null tuple");
            }
            return Ok(());
        }
        if !real(&self.trigger) {
            return fail("trigger span out of range");
        }
        if self.event_type == 0 {
            return fail("real trigger labelled NULL-EVT");
        }
        if self.argument == Span::NO_ARGUMENT {
            if self.role != 0 {
                return fail("missing argument must carry role NA");
            }
            return Ok(());
        }
        if !real(&self.argument) {
            return fail("argument span out of range");
        }
        if self.role == 0 {
            return fail("real argument labelled NA");
        }
        if self.trigger.overlaps(&self.argument) {
            return fail("trigger and argument share tokens");
        }
        Ok(())
    }

    /// `s_tr e_tr EventType s_ar e_ar Role`
    pub fn display<'a>(&'a self, schema: &'a LabelSchema) -> impl fmt::Display + 'a {
        struct Shown<'a>(&'a EventTuple, &'a LabelSchema);
        impl fmt::Display for Shown<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                let (t, s) = (self.0, self.1);
                write!(
                    f,
                    "{} {} {} {}",
                    t.trigger,
                    s.event_name(t.event_type),
                    t.argument,
                    s.role_name(t.role)
                )
            }
        }
        Shown(self, schema)
    }
}

/// Argument of an event record, raw-token coordinates.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ArgumentRecord {
    pub span: Span,
    pub role: String,
}

/// An annotated event in raw-token coordinates (no sentinels), matching the
/// corpus file schema.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EventRecord {
    pub trigger: Span,
    #[serde(rename = "type")]
    pub event_type: String,
    #[serde(default)]
    pub arguments: Vec<ArgumentRecord>,
}

/// Merges records sharing trigger and type, sorts and deduplicates arguments.
pub fn canonicalize(records: &[EventRecord]) -> Vec<EventRecord> {
    let mut merged: BTreeMap<(Span, &str), BTreeSet<&ArgumentRecord>> = BTreeMap::new();
    for record in records {
        merged
            .entry((record.trigger, record.event_type.as_str()))
            .or_default()
            .extend(record.arguments.iter());
    }
    merged
        .into_iter()
        .map(|((trigger, event_type), args)| EventRecord {
            trigger,
            event_type: event_type.to_string(),
            arguments: args.into_iter().cloned().collect(),
        })
        .collect()
}

/// Converts gold events into the sorted, deduplicated tuple sequence.
pub fn encode_frames(
    sentence: &Sentence,
    gold: &[EventRecord],
    schema: &LabelSchema,
) -> Result<Vec<EventTuple>> {
    let raw_len = sentence.len() - SENTINEL_OFFSET;
    let check = |span: Span, what: &str| -> Result<Span> {
        if span.start > span.end || span.end >= raw_len {
            return Err(Error::InvalidInput(format!(
                "{what} span [{}, {}] outside sentence of {raw_len} tokens",
                span.start, span.end
            )));
        }
        Ok(span.shift_up(SENTINEL_OFFSET))
    };

    let mut tuples = BTreeSet::new();
    for record in gold {
        let trigger = check(record.trigger, "trigger")?;
        let event_type = schema.event_id(&record.event_type)?;
        if event_type == 0 {
            return Err(Error::InvalidInput(format!(
                "event at {} uses the reserved type {NULL_EVENT}",
                record.trigger
            )));
        }
        if record.arguments.is_empty() {
            tuples.insert(EventTuple {
                trigger,
                argument: Span::NO_ARGUMENT,
                event_type,
                role: 0,
            });
        }
        for arg in &record.arguments {
            let argument = check(arg.span, "argument")?;
            let role = schema.role_id(&arg.role)?;
            if role == 0 {
                return Err(Error::InvalidInput(format!(
                    "argument at {} uses the reserved role {NULL_ROLE}",
                    arg.span
                )));
            }
            if argument.overlaps(&trigger) {
                return Err(Error::InvalidInput(format!(
                    "argument {} overlaps trigger {}",
                    arg.span, record.trigger
                )));
            }
            tuples.insert(EventTuple {
                trigger,
                argument,
                event_type,
                role,
            });
        }
    }
    if tuples.is_empty() {
        return Ok(vec![EventTuple::NULL]);
    }
    Ok(tuples.into_iter().collect())
}

/// A decoded event with surface phrases, in raw-token coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodedEvent {
    pub trigger: Span,
    pub trigger_text: String,
    pub event_type: String,
    pub arguments: Vec<DecodedArgument>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodedArgument {
    pub span: Span,
    pub text: String,
    pub role: String,
}

impl DecodedEvent {
    pub fn to_record(&self) -> EventRecord {
        EventRecord {
            trigger: self.trigger,
            event_type: self.event_type.clone(),
            arguments: self
                .arguments
                .iter()
                .map(|a| ArgumentRecord {
                    span: a.span,
                    role: a.role.clone(),
                })
                .collect(),
        }
    }
}

/// Groups tuples back into events. Null tuples vanish; `NA` arguments leave an
/// event with no arguments.
pub fn decode_frames(
    tuples: &[EventTuple],
    sentence: &Sentence,
    schema: &LabelSchema,
) -> Result<Vec<DecodedEvent>> {
    let n = sentence.len();
    let mut grouped: BTreeMap<(Span, usize), BTreeSet<(Span, usize)>> = BTreeMap::new();
    for tuple in tuples {
        if tuple.event_type >= schema.num_event_classes() || tuple.role >= schema.num_role_classes()
        {
            return Err(Error::InvalidInput(format!("tuple {tuple:?}: label out of range")));
        }
        tuple.validate(n)?;
        if tuple.is_null() {
            continue;
        }
        let args = grouped.entry((tuple.trigger, tuple.event_type)).or_default();
        if tuple.has_argument() {
            args.insert((tuple.argument, tuple.role));
        }
    }
    Ok(grouped
        .into_iter()
        .map(|((trigger, event_type), args)| DecodedEvent {
            trigger: trigger.shift_down(SENTINEL_OFFSET),
            trigger_text: sentence.phrase(trigger),
            event_type: schema.event_name(event_type).to_string(),
            arguments: args
                .into_iter()
                .map(|(span, role)| DecodedArgument {
                    span: span.shift_down(SENTINEL_OFFSET),
                    text: sentence.phrase(span),
                    role: schema.role_name(role).to_string(),
                })
                .collect(),
        })
        .collect())
}

/// Renders tuples as `"7 7 Movement:Transport 8 11 Artifact , ..."`.
pub fn format_tuples(tuples: &[EventTuple], schema: &LabelSchema) -> String {
    tuples
        .iter()
        .map(|t| t.display(schema).to_string())
        .collect::<Vec<_>>()
        .join(" , ")
}

/// Parses the textual tuple form produced by [`format_tuples`].
pub fn parse_tuples(text: &str, schema: &LabelSchema) -> Result<Vec<EventTuple>> {
    let text = text.trim();
    if text.is_empty() {
        return Ok(Vec::new());
    }
    text.split(" , ")
        .map(|chunk| {
            let fields: Vec<&str> = chunk.split_whitespace().collect();
            let [s_tr, e_tr, ty, s_ar, e_ar, role] = fields[..] else {
                return Err(Error::InvalidInput(format!(
                    "expected 6 fields in tuple {chunk:?}"
                )));
            };
            let index = |s: &str| {
                s.parse::<usize>()
                    .map_err(|_| Error::InvalidInput(format!("bad index {s:?} in {chunk:?}")))
            };
            Ok(EventTuple {
                trigger: Span::new(index(s_tr)?, index(e_tr)?),
                event_type: schema.event_id(ty)?,
                argument: Span::new(index(s_ar)?, index(e_ar)?),
                role: schema.role_id(role)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema() -> LabelSchema {
        LabelSchema::new(
            ["Movement:Transport", "Conflict:Attack"],
            ["Artifact", "Destination"],
        )
        .unwrap()
    }

    fn deploy() -> Sentence {
        let raw: Vec<&str> =
            "Orders went out today to deploy 17,000 U.S. Army soldiers in the Persian Gulf region ."
                .split(' ')
                .collect();
        let tags = vec!["X"; raw.len()];
        augment_sentence(&raw, &tags, &tags, &tags).unwrap()
    }

    #[test]
    fn schema_reserves_null_labels() {
        let s = schema();
        assert_eq!(s.event_types()[0], NULL_EVENT);
        assert_eq!(s.role_types()[0], NULL_ROLE);
        assert_eq!(s.num_event_classes(), 3);
        assert_eq!(s.num_role_classes(), 3);
        let again = LabelSchema::new([NULL_EVENT, "A"], [NULL_ROLE, "B"]).unwrap();
        assert_eq!(again.event_types(), ["NULL-EVT", "A"]);
        assert!(LabelSchema::new(["A", "A"], ["B"]).is_err());
        assert!(matches!(s.event_id("Nope"), Err(Error::Schema(_))));
    }

    #[test]
    fn schema_file_round_trip() {
        let s = schema();
        let json = serde_json::to_string(&s).unwrap();
        assert!(!json.contains(NULL_EVENT));
        let back: LabelSchema = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn augment_places_sentinels() {
        let s = deploy();
        assert_eq!(s.len(), 18);
        assert_eq!(s.tokens[7], "deploy");
        assert_eq!(s.tokens[8], "17,000");
        assert_eq!(s.tokens[16], "region");
        assert_eq!(s.pos_tags[..2], ["SENT", "SENT"]);

        let one = augment_sentence(&["hello"], &["X"], &["X"], &["O"]).unwrap();
        assert_eq!(one.tokens, ["[unused1]", "[unused2]", "hello"]);

        let empty: [&str; 0] = [];
        assert!(matches!(
            augment_sentence(&empty, &empty, &empty, &empty),
            Err(Error::InvalidInput(_))
        ));
        assert!(augment_sentence(&["a", "b"], &["X"], &["X", "X"], &["O", "O"]).is_err());
    }

    #[test]
    fn encodes_deploy_frames() {
        let s = schema();
        let gold = vec![EventRecord {
            trigger: Span::new(5, 5),
            event_type: "Movement:Transport".into(),
            arguments: vec![
                ArgumentRecord {
                    span: Span::new(11, 14),
                    role: "Destination".into(),
                },
                ArgumentRecord {
                    span: Span::new(6, 9),
                    role: "Artifact".into(),
                },
            ],
        }];
        let tuples = encode_frames(&deploy(), &gold, &s).unwrap();
        assert_eq!(
            format_tuples(&tuples, &s),
            "7 7 Movement:Transport 8 11 Artifact , 7 7 Movement:Transport 13 16 Destination"
        );
        assert_eq!(parse_tuples(&format_tuples(&tuples, &s), &s).unwrap(), tuples);
    }

    #[test]
    fn no_events_is_the_null_tuple() {
        let s = schema();
        let tuples = encode_frames(&deploy(), &[], &s).unwrap();
        assert_eq!(tuples, vec![EventTuple::NULL]);
        assert_eq!(format_tuples(&tuples, &s), "0 0 NULL-EVT 1 1 NA");
        assert!(decode_frames(&tuples, &deploy(), &s).unwrap().is_empty());
    }

    #[test]
    fn encode_rejects_bad_spans_and_labels() {
        let s = schema();
        let record = |trigger: [usize; 2], ty: &str, arg: Option<([usize; 2], &str)>| EventRecord {
            trigger: trigger.into(),
            event_type: ty.into(),
            arguments: arg
                .map(|(span, role)| ArgumentRecord {
                    span: span.into(),
                    role: role.into(),
                })
                .into_iter()
                .collect(),
        };
        let sent = deploy();
        let bad_span = record([5, 16], "Conflict:Attack", None);
        assert!(matches!(
            encode_frames(&sent, &[bad_span], &s),
            Err(Error::InvalidInput(_))
        ));
        let reversed = record([6, 5], "Conflict:Attack", None);
        assert!(encode_frames(&sent, &[reversed], &s).is_err());
        let unknown = record([5, 5], "Life:Die", None);
        assert!(matches!(
            encode_frames(&sent, &[unknown], &s),
            Err(Error::Schema(_))
        ));
        let overlap = record([5, 6], "Conflict:Attack", Some(([6, 8], "Artifact")));
        assert!(encode_frames(&sent, &[overlap], &s).is_err());
    }

    #[test]
    fn decode_recovers_phrases() {
        let s = schema();
        let tuple = EventTuple {
            trigger: Span::new(7, 7),
            event_type: 1,
            argument: Span::new(8, 11),
            role: 1,
        };
        let events = decode_frames(&[tuple], &deploy(), &s).unwrap();
        assert_eq!(events.len(), 1);
        assert_eq!(events[0].trigger_text, "deploy");
        assert_eq!(events[0].arguments[0].text, "17,000 U.S. Army soldiers");
        assert_eq!(events[0].trigger, Span::new(5, 5));

        let out_of_range = EventTuple {
            argument: Span::new(8, 18),
            ..tuple
        };
        assert!(decode_frames(&[out_of_range], &deploy(), &s).is_err());
    }

    #[test]
    fn tuple_validation() {
        let ok = EventTuple {
            trigger: Span::new(2, 3),
            event_type: 1,
            argument: Span::NO_ARGUMENT,
            role: 0,
        };
        assert!(ok.validate(5).is_ok());
        assert!(EventTuple::NULL.validate(3).is_ok());
        let na_with_role = EventTuple { role: 1, ..ok };
        assert!(na_with_role.validate(5).is_err());
        let sentinel_span = EventTuple {
            trigger: Span::new(1, 3),
            ..ok
        };
        assert!(sentinel_span.validate(5).is_err());
        let null_type = EventTuple { event_type: 0, ..ok };
        assert!(null_type.validate(5).is_err());
    }

    #[test]
    fn canonical_merges_duplicates() {
        let arg = |s, e, r: &str| ArgumentRecord {
            span: Span::new(s, e),
            role: r.into(),
        };
        let a = EventRecord {
            trigger: Span::new(3, 3),
            event_type: "T".into(),
            arguments: vec![arg(5, 6, "R"), arg(0, 1, "Q")],
        };
        let b = EventRecord {
            trigger: Span::new(3, 3),
            event_type: "T".into(),
            arguments: vec![arg(0, 1, "Q")],
        };
        let canon = canonicalize(&[a, b]);
        assert_eq!(canon.len(), 1);
        assert_eq!(canon[0].arguments, vec![arg(0, 1, "Q"), arg(5, 6, "R")]);
    }
}
