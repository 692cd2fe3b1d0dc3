//! Greedy longest-match WordPiece tokenization.
//!
//! Tokens arrive already split into words; each word is broken into pieces
//! independently so that every word keeps a known piece range. Continuation
//! pieces carry the `##` prefix. Vocabularies are either read from a
//! `vocab.txt` (one piece per line) or built from a training corpus.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame_codec::{Sentence, NO_ARGUMENT_TOKEN, NO_TRIGGER_TOKEN};

pub const PAD: &str = "[PAD]";
pub const UNK: &str = "[UNK]";
pub const CLS: &str = "[CLS]";
pub const SEP: &str = "[SEP]";
const SPECIALS: [&str; 6] = [PAD, UNK, CLS, SEP, NO_TRIGGER_TOKEN, NO_ARGUMENT_TOKEN];
const MAX_CHARS_PER_WORD: usize = 100;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "PieceFile", into = "PieceFile")]
pub struct PieceVocab {
    pieces: Vec<String>,
    index: HashMap<String, u32>,
    lowercase: bool,
}

#[derive(Serialize, Deserialize)]
struct PieceFile {
    pieces: Vec<String>,
    lowercase: bool,
}

impl From<PieceFile> for PieceVocab {
    fn from(file: PieceFile) -> Self {
        PieceVocab::from_pieces(file.pieces, file.lowercase)
    }
}

impl From<PieceVocab> for PieceFile {
    fn from(vocab: PieceVocab) -> Self {
        PieceFile {
            pieces: vocab.pieces,
            lowercase: vocab.lowercase,
        }
    }
}

/// A word split into pieces, as vocabulary ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PiecedSentence {
    /// `[CLS]`, the pieces of every token in order, `[SEP]`.
    pub ids: Vec<u32>,
    /// Half-open piece range of each token in `ids`.
    pub ranges: Vec<(usize, usize)>,
}

impl PieceVocab {
    /// Vocabulary from an explicit piece list. Missing special pieces are
    /// appended so that lookups never fail.
    pub fn from_pieces(mut pieces: Vec<String>, lowercase: bool) -> Self {
        for special in SPECIALS {
            if !pieces.iter().any(|p| p == special) {
                pieces.push(special.to_string());
            }
        }
        let index = pieces
            .iter()
            .enumerate()
            .map(|(i, p)| (p.clone(), i as u32))
            .collect();
        PieceVocab {
            pieces,
            index,
            lowercase,
        }
    }

    /// Reads a `vocab.txt` file.
    pub fn load(path: &Path, lowercase: bool) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let pieces: Vec<String> = text.lines().map(|l| l.trim_end().to_string()).collect();
        if pieces.is_empty() {
            return Err(Error::Config(format!("{} holds no pieces", path.display())));
        }
        Ok(Self::from_pieces(pieces, lowercase))
    }

    /// Builds a vocabulary from corpus words: specials, every word seen at
    /// least `min_count` times, and every character both as a word-initial
    /// and as a `##` continuation piece.
    pub fn build<'a>(words: impl IntoIterator<Item = &'a str>, min_count: usize, lowercase: bool) -> Self {
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for word in words {
            if SPECIALS.contains(&word) {
                continue;
            }
            let word = if lowercase { word.to_lowercase() } else { word.to_string() };
            *counts.entry(word).or_default() += 1;
        }
        let mut chars: Vec<char> = counts.keys().flat_map(|w| w.chars()).collect();
        chars.sort_unstable();
        chars.dedup();
        let mut pieces: Vec<String> = SPECIALS.iter().map(|s| s.to_string()).collect();
        pieces.extend(chars.iter().map(|c| c.to_string()));
        pieces.extend(chars.iter().map(|c| format!("##{c}")));
        pieces.extend(
            counts
                .into_iter()
                .filter(|(w, c)| *c >= min_count && w.chars().count() > 1)
                .map(|(w, _)| w),
        );
        Self::from_pieces(pieces, lowercase)
    }

    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn id(&self, piece: &str) -> Option<u32> {
        self.index.get(piece).copied()
    }

    pub fn piece(&self, id: u32) -> &str {
        &self.pieces[id as usize]
    }

    fn special(&self, piece: &str) -> u32 {
        self.index[piece]
    }

    /// Pieces of one word; a word that cannot be covered becomes `[UNK]`.
    pub fn tokenize_word(&self, word: &str) -> Vec<u32> {
        if let Some(id) = self.id(word).filter(|_| SPECIALS.contains(&word)) {
            return vec![id];
        }
        let word = if self.lowercase { word.to_lowercase() } else { word.to_string() };
        let chars: Vec<char> = word.chars().collect();
        if chars.is_empty() || chars.len() > MAX_CHARS_PER_WORD {
            return vec![self.special(UNK)];
        }
        let mut out = Vec::new();
        let mut start = 0;
        while start < chars.len() {
            let mut end = chars.len();
            let mut found = None;
            while start < end {
                let body: String = chars[start..end].iter().collect();
                let candidate = if start > 0 { format!("##{body}") } else { body };
                if let Some(id) = self.id(&candidate) {
                    found = Some(id);
                    break;
                }
                end -= 1;
            }
            match found {
                Some(id) => out.push(id),
                None => return vec![self.special(UNK)],
            }
            start = end;
        }
        out
    }

    /// Splits a whole sentence, sentinels included, and wraps it in
    /// `[CLS]` / `[SEP]`.
    pub fn tokenize(&self, sentence: &Sentence) -> PiecedSentence {
        let mut ids = vec![self.special(CLS)];
        let mut ranges = Vec::with_capacity(sentence.len());
        for token in &sentence.tokens {
            let start = ids.len();
            ids.extend(self.tokenize_word(token));
            ranges.push((start, ids.len()));
        }
        ids.push(self.special(SEP));
        PiecedSentence { ids, ranges }
    }

    pub fn pad_id(&self) -> u32 {
        self.special(PAD)
    }
}
