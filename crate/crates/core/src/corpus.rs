//! Encounter corpora: loading, validation and per-split statistics.
//!
//! On disk a corpus is `<root>/<split>/<id>.dialogue.txt` plus
//! `<root>/<split>/<id>.note.txt`. An optional JSON manifest
//! (`[{"id": ..., "split": ...}]`) overrides the split taken from the
//! directory name and may also place files that sit directly under `<root>`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dialogue::{normalize_text, parse_dialogue, Tokenizer};
use crate::soap::parse_note;
use crate::{Error, Result};

const DIALOGUE_SUFFIX: &str = ".dialogue.txt";
const NOTE_SUFFIX: &str = ".note.txt";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Valid,
    Test1,
    Test2,
    Test3,
}

impl Split {
    pub const ALL: [Split; 5] = [Split::Train, Split::Valid, Split::Test1, Split::Test2, Split::Test3];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Valid => "valid",
            Split::Test1 => "test1",
            Split::Test2 => "test2",
            Split::Test3 => "test3",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Split::ALL
            .into_iter()
            .find(|split| split.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown split `{s}`")))
    }
}

/// One dialogue/note pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncounterPair {
    #[serde(rename = "id")]
    pub encounter_id: String,
    pub split: Split,
    #[serde(rename = "dialogue")]
    pub raw_dialogue: String,
    #[serde(rename = "note")]
    pub raw_note: String,
}

impl EncounterPair {
    pub fn new(
        encounter_id: impl Into<String>,
        split: Split,
        raw_dialogue: impl Into<String>,
        raw_note: impl Into<String>,
    ) -> Result<Self> {
        let pair = Self {
            encounter_id: encounter_id.into(),
            split,
            raw_dialogue: raw_dialogue.into(),
            raw_note: raw_note.into(),
        };
        pair.check()?;
        Ok(pair)
    }

    /// Checks the non-empty id and text invariants.
    pub fn check(&self) -> Result<()> {
        if self.encounter_id.trim().is_empty() {
            return Err(Error::Validation("encounter id is empty".into()));
        }
        if self.raw_dialogue.trim().is_empty() {
            return Err(Error::Validation("dialogue is empty".into()).in_encounter(&self.encounter_id));
        }
        if self.raw_note.trim().is_empty() {
            return Err(Error::Validation("note is empty".into()).in_encounter(&self.encounter_id));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Corpus {
    pairs: Vec<EncounterPair>,
    source_path: String,
}

impl Corpus {
    /// Builds a corpus, rejecting duplicate ids and empty texts.
    pub fn new(pairs: Vec<EncounterPair>, source_path: impl Into<String>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for pair in &pairs {
            pair.check()?;
            if !seen.insert(pair.encounter_id.as_str()) {
                return Err(Error::Validation(format!(
                    "duplicate encounter id `{}`",
                    pair.encounter_id
                )));
            }
        }
        Ok(Self {
            pairs,
            source_path: source_path.into(),
        })
    }

    pub fn pairs(&self) -> &[EncounterPair] {
        &self.pairs
    }

    pub fn source_path(&self) -> &str {
        &self.source_path
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&EncounterPair> {
        self.pairs.iter().find(|p| p.encounter_id == id)
    }

    /// Keeps only the pairs of one split.
    pub fn filter_split(&self, split: Split) -> Corpus {
        Corpus {
            pairs: self.pairs.iter().filter(|p| p.split == split).cloned().collect(),
            source_path: self.source_path.clone(),
        }
    }
}

#[derive(Debug, Deserialize)]
struct ManifestEntry {
    id: String,
    split: Split,
}

fn read_manifest(path: &Path) -> Result<HashMap<String, Split>> {
    let text = crate::io::read_to_string(path)?;
    let entries: Vec<ManifestEntry> = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })?;
    let mut map = HashMap::with_capacity(entries.len());
    for entry in entries {
        if map.insert(entry.id.clone(), entry.split).is_some() {
            return Err(Error::Validation(format!(
                "manifest {} lists `{}` twice",
                path.display(),
                entry.id
            )));
        }
    }
    Ok(map)
}

#[derive(Default)]
struct FoundFiles {
    dialogue: Option<PathBuf>,
    note: Option<PathBuf>,
    dir_split: Option<Split>,
}

fn scan_dir(dir: &Path, dir_split: Option<Split>, found: &mut BTreeMap<String, FoundFiles>) -> Result<()> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
            continue;
        };
        let (id, is_dialogue) = if let Some(id) = name.strip_suffix(DIALOGUE_SUFFIX) {
            (id, true)
        } else if let Some(id) = name.strip_suffix(NOTE_SUFFIX) {
            (id, false)
        } else {
            continue;
        };
        if !path.is_file() {
            continue;
        }
        let slot = found.entry(id.to_string()).or_default();
        if slot.dir_split.is_some() && slot.dir_split != dir_split
            || slot.dialogue.is_some() && is_dialogue
            || slot.note.is_some() && !is_dialogue
        {
            return Err(Error::Validation(format!(
                "duplicate encounter id `{id}` ({})",
                path.display()
            )));
        }
        slot.dir_split = dir_split;
        if is_dialogue {
            slot.dialogue = Some(path);
        } else {
            slot.note = Some(path);
        }
    }
    Ok(())
}

/// Loads every `<id>.dialogue.txt` / `<id>.note.txt` pair under `root`.
///
/// Pairs are returned ordered by split, then by id. Split directories that
/// do not exist are skipped, so an empty root yields an empty corpus.
pub fn load_corpus(root: &Path, manifest: Option<&Path>) -> Result<Corpus> {
    if !root.is_dir() {
        return Err(Error::io(
            root,
            std::io::Error::new(std::io::ErrorKind::NotFound, "corpus directory not found"),
        ));
    }
    let overrides = manifest.map(read_manifest).transpose()?.unwrap_or_default();

    let mut found = BTreeMap::new();
    scan_dir(root, None, &mut found)?;
    for split in Split::ALL {
        let dir = root.join(split.as_str());
        if dir.is_dir() {
            scan_dir(&dir, Some(split), &mut found)?;
        }
    }

    for id in overrides.keys() {
        if !found.contains_key(id) {
            return Err(Error::Validation(format!("manifest names unknown encounter `{id}`")));
        }
    }

    let mut pairs = Vec::with_capacity(found.len());
    for (id, files) in found {
        let dialogue_path = files.dialogue.ok_or_else(|| Error::OrphanRecord {
            id: id.clone(),
            missing: "dialogue",
        })?;
        let note_path = files.note.ok_or_else(|| Error::OrphanRecord {
            id: id.clone(),
            missing: "note",
        })?;
        let split = overrides
            .get(&id)
            .copied()
            .or(files.dir_split)
            .ok_or_else(|| {
                Error::Validation(format!("encounter `{id}` has no split (not in a split directory or the manifest)"))
            })?;
        pairs.push(EncounterPair {
            raw_dialogue: crate::io::read_to_string(&dialogue_path)?,
            raw_note: crate::io::read_to_string(&note_path)?,
            encounter_id: id,
            split,
        });
    }
    pairs.sort_by(|a, b| (a.split, &a.encounter_id).cmp(&(b.split, &b.encounter_id)));
    Corpus::new(pairs, root.display().to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitStats {
    pub split: Split,
    pub num_encounters: usize,
    pub avg_turns: f64,
    pub avg_dialogue_tokens: f64,
    pub avg_note_tokens: f64,
}

/// Per-encounter counts behind [`SplitStats`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EncounterCounts {
    pub turns: usize,
    pub dialogue_tokens: usize,
    pub note_tokens: usize,
}

/// Counts turns and tokens for one pair. Dialogue tokens are counted over
/// turn texts, so speaker tags never count; notes are normalized first.
pub fn encounter_counts(pair: &EncounterPair, tokenizer: &Tokenizer) -> Result<EncounterCounts> {
    let dialogue = parse_dialogue(&pair.raw_dialogue, &pair.encounter_id)
        .map_err(|e| e.in_encounter(&pair.encounter_id))?;
    Ok(EncounterCounts {
        turns: dialogue.len(),
        dialogue_tokens: dialogue.turns.iter().map(|t| tokenizer.count(&t.text)).sum(),
        note_tokens: tokenizer.count(&normalize_text(&pair.raw_note)),
    })
}

/// One [`SplitStats`] per split present, in canonical split order.
///
/// Counts are computed in parallel; the sums are integer, so the result does
/// not depend on pair order or thread count.
pub fn corpus_stats(corpus: &Corpus, tokenizer: &Tokenizer) -> Result<Vec<SplitStats>> {
    let counts: Vec<(Split, EncounterCounts)> = corpus
        .pairs()
        .par_iter()
        .map(|p| encounter_counts(p, tokenizer).map(|c| (p.split, c)))
        .collect::<Result<_>>()?;

    let mut totals: BTreeMap<Split, (usize, usize, usize, usize)> = BTreeMap::new();
    for (split, c) in counts {
        let t = totals.entry(split).or_default();
        t.0 += 1;
        t.1 += c.turns;
        t.2 += c.dialogue_tokens;
        t.3 += c.note_tokens;
    }
    Ok(totals
        .into_iter()
        .map(|(split, (n, turns, dtok, ntok))| {
            let n_f = n as f64;
            SplitStats {
                split,
                num_encounters: n,
                avg_turns: turns as f64 / n_f,
                avg_dialogue_tokens: dtok as f64 / n_f,
                avg_note_tokens: ntok as f64 / n_f,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    /// Each id that occurs more than once, listed once.
    pub duplicate_ids: Vec<String>,
    /// `(id, "dialogue" | "note" | "id")` for every empty field.
    pub empty_texts: Vec<(String, String)>,
    /// Ids whose note has no recognizable section header.
    pub unsectioned_notes: Vec<String>,
    /// `(id, message)` for dialogues the turn parser rejects.
    pub dialogue_errors: Vec<(String, String)>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.duplicate_ids.is_empty()
            && self.empty_texts.is_empty()
            && self.unsectioned_notes.is_empty()
            && self.dialogue_errors.is_empty()
    }
}

/// Reports problems in a set of pairs without failing on them.
pub fn validate_corpus(pairs: &[EncounterPair]) -> ValidationReport {
    let mut report = ValidationReport::default();
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for pair in pairs {
        *counts.entry(pair.encounter_id.as_str()).or_default() += 1;
    }
    report.duplicate_ids = counts
        .into_iter()
        .filter(|&(_, n)| n > 1)
        .map(|(id, _)| id.to_string())
        .collect();

    for pair in pairs {
        let id = &pair.encounter_id;
        if id.trim().is_empty() {
            report.empty_texts.push((id.clone(), "id".into()));
        }
        if pair.raw_dialogue.trim().is_empty() {
            report.empty_texts.push((id.clone(), "dialogue".into()));
        } else if let Err(e) = parse_dialogue(&pair.raw_dialogue, id) {
            report.dialogue_errors.push((id.clone(), e.to_string()));
        }
        if pair.raw_note.trim().is_empty() {
            report.empty_texts.push((id.clone(), "note".into()));
        } else if !parse_note(&pair.raw_note).is_sectioned() {
            report.unsectioned_notes.push(id.clone());
        }
    }
    report
}
