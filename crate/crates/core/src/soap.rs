//! Clinical note sectionizing.
//!
//! Notes are first split at recognized header lines into a [`SurfaceNote`],
//! then folded into the four canonical SOAP sections of a [`CanonicalNote`].
//! A header is recognized only when a whole trimmed line equals a lexicon
//! entry (optionally followed by `:`), so lowercase or in-sentence mentions
//! never split a body.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Section {
    Subjective,
    ObjectiveExam,
    ObjectiveResults,
    AssessmentAndPlan,
}

impl Section {
    pub const ALL: [Section; 4] = [
        Section::Subjective,
        Section::ObjectiveExam,
        Section::ObjectiveResults,
        Section::AssessmentAndPlan,
    ];

    /// Header emitted by [`render_note`].
    pub fn header(self) -> &'static str {
        match self {
            Section::Subjective => "SUBJECTIVE",
            Section::ObjectiveExam => "OBJECTIVE_EXAM",
            Section::ObjectiveResults => "OBJECTIVE_RESULTS",
            Section::AssessmentAndPlan => "ASSESSMENT_AND_PLAN",
        }
    }

    fn parse(name: &str) -> Option<Self> {
        Section::ALL
            .into_iter()
            .find(|s| s.header().eq_ignore_ascii_case(name) || serde_name(*s) == name)
    }
}

fn serde_name(section: Section) -> &'static str {
    match section {
        Section::Subjective => "subjective",
        Section::ObjectiveExam => "objective_exam",
        Section::ObjectiveResults => "objective_results",
        Section::AssessmentAndPlan => "assessment_and_plan",
    }
}

const DEFAULT_LEXICON: &[(&str, Section)] = &[
    ("CHIEF COMPLAINT", Section::Subjective),
    ("HISTORY OF PRESENT ILLNESS", Section::Subjective),
    ("REVIEW OF SYSTEMS", Section::Subjective),
    ("SUBJECTIVE", Section::Subjective),
    ("PHYSICAL EXAMINATION", Section::ObjectiveExam),
    ("PHYSICAL EXAM", Section::ObjectiveExam),
    ("OBJECTIVE_EXAM", Section::ObjectiveExam),
    ("RESULTS", Section::ObjectiveResults),
    ("OBJECTIVE_RESULTS", Section::ObjectiveResults),
    ("ASSESSMENT AND PLAN", Section::AssessmentAndPlan),
    ("ASSESSMENT", Section::AssessmentAndPlan),
    ("PLAN", Section::AssessmentAndPlan),
    ("ASSESSMENT_AND_PLAN", Section::AssessmentAndPlan),
];

/// Surface header → canonical section table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeaderLexicon {
    entries: BTreeMap<String, Section>,
}

impl Default for HeaderLexicon {
    fn default() -> Self {
        Self {
            entries: DEFAULT_LEXICON
                .iter()
                .map(|&(h, s)| (h.to_string(), s))
                .collect(),
        }
    }
}

impl HeaderLexicon {
    /// Builds a lexicon from `{"SURFACE HEADER": "section"}` JSON, replacing
    /// the compiled-in table. Section names may be given as `subjective` or
    /// `SUBJECTIVE` style.
    pub fn from_json(json: &str) -> Result<Self> {
        let raw: BTreeMap<String, String> = serde_json::from_str(json)
            .map_err(|e| Error::Config(format!("header lexicon: {e}")))?;
        let mut entries = BTreeMap::new();
        for (header, section) in raw {
            let header = header.trim().to_string();
            if header.is_empty() || header.chars().any(char::is_lowercase) {
                return Err(Error::Config(format!(
                    "header lexicon: `{header}` must be a non-empty uppercase header"
                )));
            }
            let section = Section::parse(&section).ok_or_else(|| {
                Error::Config(format!("header lexicon: unknown section `{section}`"))
            })?;
            entries.insert(header, section);
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&crate::io::read_to_string(path)?)
    }

    pub fn section_of(&self, header: &str) -> Option<Section> {
        self.entries.get(header).copied()
    }

    fn match_line(&self, line: &str) -> Option<&str> {
        let trimmed = line.trim();
        let candidate = trimmed.strip_suffix(':').map_or(trimmed, str::trim_end);
        self.entries.get_key_value(candidate).map(|(k, _)| k.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    /// Empty for text preceding the first header.
    pub header: String,
    pub body: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SurfaceNote {
    pub segments: Vec<Segment>,
}

impl SurfaceNote {
    /// True when the note contains at least one recognized header.
    pub fn is_sectioned(&self) -> bool {
        self.segments.iter().any(|s| !s.header.is_empty())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CanonicalNote {
    pub subjective: String,
    pub objective_exam: String,
    pub objective_results: String,
    pub assessment_and_plan: String,
}

impl CanonicalNote {
    pub fn get(&self, section: Section) -> &str {
        match section {
            Section::Subjective => &self.subjective,
            Section::ObjectiveExam => &self.objective_exam,
            Section::ObjectiveResults => &self.objective_results,
            Section::AssessmentAndPlan => &self.assessment_and_plan,
        }
    }

    fn get_mut(&mut self, section: Section) -> &mut String {
        match section {
            Section::Subjective => &mut self.subjective,
            Section::ObjectiveExam => &mut self.objective_exam,
            Section::ObjectiveResults => &mut self.objective_results,
            Section::AssessmentAndPlan => &mut self.assessment_and_plan,
        }
    }
}

pub fn parse_note(raw_note: &str) -> SurfaceNote {
    parse_note_with(raw_note, &HeaderLexicon::default())
}

/// Splits a note at header lines. Bodies are trimmed; an empty preamble is
/// omitted, a note without headers becomes a single preamble segment.
pub fn parse_note_with(raw_note: &str, lexicon: &HeaderLexicon) -> SurfaceNote {
    let mut segments = Vec::new();
    let mut header = String::new();
    let mut body: Vec<&str> = Vec::new();

    let flush = |header: &str, body: &mut Vec<&str>, segments: &mut Vec<Segment>| {
        let text = body.join("\n").trim().to_string();
        if !header.is_empty() || !text.is_empty() {
            segments.push(Segment {
                header: header.to_string(),
                body: text,
            });
        }
        body.clear();
    };

    for line in raw_note.lines() {
        match lexicon.match_line(line) {
            Some(h) => {
                flush(&header, &mut body, &mut segments);
                header = h.to_string();
            }
            None => body.push(line),
        }
    }
    flush(&header, &mut body, &mut segments);
    SurfaceNote { segments }
}

pub fn canonicalize_sections(note: &SurfaceNote) -> CanonicalNote {
    canonicalize_sections_with(note, &HeaderLexicon::default())
}

/// Folds surface segments into the four canonical sections, in source
/// order, joining bodies with newlines. Preamble text and headers the
/// lexicon does not know go to `subjective`.
pub fn canonicalize_sections_with(note: &SurfaceNote, lexicon: &HeaderLexicon) -> CanonicalNote {
    let mut out = CanonicalNote::default();
    for seg in &note.segments {
        if seg.body.is_empty() {
            continue;
        }
        let section = lexicon.section_of(&seg.header).unwrap_or(Section::Subjective);
        let field = out.get_mut(section);
        if !field.is_empty() {
            field.push('\n');
        }
        field.push_str(&seg.body);
    }
    out
}

/// Emits the four canonical headers in fixed order, each on its own line
/// followed by the section body and a blank line.
pub fn render_note(note: &CanonicalNote) -> String {
    let mut out = String::new();
    for section in Section::ALL {
        out.push_str(section.header());
        out.push('\n');
        let body = note.get(section);
        if !body.is_empty() {
            out.push_str(body);
            out.push('\n');
        }
        out.push('\n');
    }
    out
}
