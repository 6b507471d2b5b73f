//! Transcript normalization, speaker-turn parsing and token counting.

use std::collections::HashSet;
use std::path::Path;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::{Error, Result};

static TAG: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\[([^\[\]\s]+)\]").unwrap());

const RETAINED_PUNCTUATION: &[char] = &[
    '.', ',', '?', '!', '\'', '-', ':', ';', '(', ')', '[', ']', '/',
];

fn is_retained(c: char) -> bool {
    c.is_alphanumeric() || RETAINED_PUNCTUATION.contains(&c)
}

/// Canonical text form used throughout the pipeline.
///
/// NFC-composes and lowercases the input, drops control characters and
/// anything outside letters, digits and `. , ? ! ' - : ; ( ) [ ] /`, then
/// collapses whitespace runs to a single space and trims both ends.
/// `normalize_text(&normalize_text(x)) == normalize_text(x)` for all `x`.
pub fn normalize_text(raw: &str) -> String {
    let lowered = raw.nfc().collect::<String>().to_lowercase();
    let filtered: String = lowered
        .nfc()
        .filter_map(|c| {
            if c.is_whitespace() {
                Some(' ')
            } else if is_retained(c) {
                Some(c)
            } else {
                None
            }
        })
        .collect();
    // Dropping a character can leave a base letter next to a mark it now
    // composes with.
    let recomposed: String = filtered.nfc().filter(|&c| c == ' ' || is_retained(c)).collect();
    let mut out = String::with_capacity(recomposed.len());
    for word in recomposed.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

/// [`normalize_text`] for raw bytes; rejects input that is not UTF-8.
pub fn normalize_bytes(raw: &[u8]) -> Result<String> {
    let text = std::str::from_utf8(raw).map_err(|e| Error::Encoding(e.to_string()))?;
    Ok(normalize_text(text))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub speaker: String,
    pub text: String,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dialogue {
    pub turns: Vec<Turn>,
    pub source_id: String,
}

impl Dialogue {
    /// Joins the turns back into `[speaker] text` form.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for turn in &self.turns {
            if !out.is_empty() {
                out.push(' ');
            }
            out.push('[');
            out.push_str(&turn.speaker);
            out.push(']');
            if !turn.text.is_empty() {
                out.push(' ');
                out.push_str(&turn.text);
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.turns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.turns.is_empty()
    }
}

/// Splits a bracket-tagged transcript into speaker turns.
///
/// The transcript is normalized first and then cut at every `[tag]`, so the
/// number of turns always equals the number of tags in the normalized text.
/// Any single bracketed word is accepted as a speaker; consecutive turns by
/// the same speaker stay separate. A tag followed directly by another tag
/// yields a turn with empty text.
pub fn parse_dialogue(raw: &str, source_id: &str) -> Result<Dialogue> {
    let normalized = normalize_text(raw);
    let tags: Vec<_> = TAG.captures_iter(&normalized).collect();
    let Some(first) = tags.first() else {
        return Err(Error::UntaggedTranscript(source_id.to_string()));
    };
    if first.get(0).unwrap().start() > 0 {
        let offset = raw.find(|c: char| !c.is_whitespace()).unwrap_or(0);
        return Err(Error::Preamble {
            source_id: source_id.to_string(),
            offset,
        });
    }

    let mut turns = Vec::with_capacity(tags.len());
    for (index, cap) in tags.iter().enumerate() {
        let whole = cap.get(0).unwrap();
        let end = tags
            .get(index + 1)
            .map_or(normalized.len(), |next| next.get(0).unwrap().start());
        turns.push(Turn {
            speaker: cap[1].to_string(),
            text: normalized[whole.end()..end].trim().to_string(),
            index,
        });
    }
    Ok(Dialogue {
        turns,
        source_id: source_id.to_string(),
    })
}

/// Vocabulary for greedy longest-match subword counting.
#[derive(Debug, Clone, Default)]
pub struct SubwordVocab {
    pieces: HashSet<String>,
    max_piece_chars: usize,
}

impl SubwordVocab {
    pub fn from_pieces<I, S>(pieces: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let pieces: HashSet<String> = pieces
            .into_iter()
            .map(Into::into)
            .filter(|p| !p.is_empty())
            .collect();
        let max_piece_chars = pieces.iter().map(|p| p.chars().count()).max().unwrap_or(0);
        Self {
            pieces,
            max_piece_chars,
        }
    }

    /// Reads a vocabulary file: one UTF-8 piece per line, blank lines ignored.
    pub fn load(path: &Path) -> Result<Self> {
        let text = crate::io::read_to_string(path)?;
        Ok(Self::from_pieces(
            text.lines().map(|l| l.trim_end_matches('\r')).filter(|l| !l.is_empty()),
        ))
    }

    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    fn count_word(&self, word: &str) -> usize {
        // byte offsets of every char boundary, including the end
        let bounds: Vec<usize> = word
            .char_indices()
            .map(|(i, _)| i)
            .chain(std::iter::once(word.len()))
            .collect();
        let chars = bounds.len() - 1;
        let mut pos = 0;
        let mut count = 0;
        while pos < chars {
            let longest = self.max_piece_chars.min(chars - pos);
            let step = (1..=longest)
                .rev()
                .find(|&len| self.pieces.contains(&word[bounds[pos]..bounds[pos + len]]))
                .unwrap_or(1);
            pos += step;
            count += 1;
        }
        count
    }
}

#[derive(Debug, Clone, Default)]
pub enum Tokenizer {
    /// Maximal runs of non-whitespace.
    #[default]
    Whitespace,
    /// Greedy longest-match pieces within each whitespace-delimited word;
    /// characters no piece covers count one each.
    Subword(SubwordVocab),
}

impl Tokenizer {
    /// Parses `whitespace` or `subword:<vocab file>`.
    pub fn from_spec(spec: &str) -> Result<Self> {
        match spec.split_once(':') {
            None if spec == "whitespace" => Ok(Tokenizer::Whitespace),
            None if spec == "subword" || spec == "subword-file" => Err(Error::Config(
                "subword tokenization needs a vocabulary file (subword:<path>)".into(),
            )),
            Some(("subword" | "subword-file", path)) => {
                if path.is_empty() {
                    return Err(Error::Config(
                        "subword tokenization needs a vocabulary file (subword:<path>)".into(),
                    ));
                }
                Ok(Tokenizer::Subword(SubwordVocab::load(Path::new(path))?))
            }
            _ => Err(Error::Config(format!(
                "unknown tokenizer `{spec}` (expected whitespace or subword:<path>)"
            ))),
        }
    }

    pub fn count(&self, text: &str) -> usize {
        match self {
            Tokenizer::Whitespace => text.split_whitespace().count(),
            Tokenizer::Subword(vocab) => text.split_whitespace().map(|w| vocab.count_word(w)).sum(),
        }
    }
}

pub fn count_tokens(text: &str, tokenizer: &Tokenizer) -> usize {
    tokenizer.count(text)
}
