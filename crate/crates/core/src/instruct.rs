//! Supervised fine-tuning records: `(instruction, input, output)` triples
//! built from encounter pairs and stored as JSON lines.

use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::corpus::EncounterPair;
use crate::dialogue::{normalize_text, parse_dialogue};
use crate::soap::Section;
use crate::{Error, Result};

/// Default instruction. Text appended through
/// [`InstructionTemplate::with_extension`] continues it.
pub const DEFAULT_INSTRUCTION: &str = "Summarize medical dialogues into a SOAP note format, \
where the note is divided into four continuous sections: {sections}. \
The SUBJECTIVE section should contain information from the verbal examination.";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstructionTemplate {
    body: String,
}

impl Default for InstructionTemplate {
    fn default() -> Self {
        Self {
            body: DEFAULT_INSTRUCTION.to_string(),
        }
    }
}

impl InstructionTemplate {
    /// `{dialogue}` expands to the normalized dialogue, `{sections}` to the
    /// four canonical section names.
    pub fn new(body: impl Into<String>) -> Result<Self> {
        let body = body.into();
        if body.trim().is_empty() {
            return Err(Error::InvalidArgument("instruction template is empty".into()));
        }
        Ok(Self { body })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::new(crate::io::read_to_string(path)?.trim_end().to_string())
    }

    /// Appends further guidance after the current body.
    pub fn with_extension(mut self, extra: &str) -> Self {
        let extra = extra.trim();
        if !extra.is_empty() {
            self.body.push(' ');
            self.body.push_str(extra);
        }
        self
    }

    pub fn body(&self) -> &str {
        &self.body
    }

    pub fn expand(&self, dialogue: &str) -> String {
        self.body
            .replace("{sections}", &section_list())
            .replace("{dialogue}", dialogue)
    }
}

fn section_list() -> String {
    let names: Vec<_> = Section::ALL.iter().map(|s| s.header()).collect();
    format!("{}, and {}", names[..3].join(", "), names[3])
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstructionRecord {
    pub instruction: String,
    pub input: String,
    pub output: String,
    #[serde(rename = "id")]
    pub encounter_id: String,
}

/// The input is the normalized dialogue; the output is the reference note
/// exactly as stored in the corpus.
pub fn build_instruction_record(
    pair: &EncounterPair,
    template: &InstructionTemplate,
) -> Result<InstructionRecord> {
    pair.check()?;
    parse_dialogue(&pair.raw_dialogue, &pair.encounter_id)
        .map_err(|e| e.in_encounter(&pair.encounter_id))?;
    let input = normalize_text(&pair.raw_dialogue);
    Ok(InstructionRecord {
        instruction: template.expand(&input),
        input,
        output: pair.raw_note.clone(),
        encounter_id: pair.encounter_id.clone(),
    })
}

/// Encodes records as JSON lines, one object per line, in input order.
pub fn records_to_jsonl(records: &[InstructionRecord]) -> String {
    let mut out = String::new();
    for record in records {
        // serializing a struct of strings cannot fail
        out.push_str(&serde_json::to_string(record).unwrap());
        out.push('\n');
    }
    out
}

/// Writes records to `path` atomically and returns how many were written.
pub fn serialize_records(records: &[InstructionRecord], path: &Path) -> Result<usize> {
    crate::io::write_atomic(path, records_to_jsonl(records).as_bytes())?;
    Ok(records.len())
}

fn field(obj: &serde_json::Map<String, Value>, key: &str, path: &Path, line: usize) -> Result<String> {
    match obj.get(key) {
        Some(Value::String(s)) => Ok(s.clone()),
        Some(_) => Err(Error::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("key `{key}` is not a string"),
        }),
        None => Err(Error::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("missing key `{key}`"),
        }),
    }
}

/// Reads a file written by [`serialize_records`]. Blank lines are skipped;
/// line numbers in errors are 1-based.
pub fn parse_records(path: &Path) -> Result<Vec<InstructionRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: line_no,
            message: format!("malformed JSON: {e}"),
        })?;
        let Value::Object(obj) = value else {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: line_no,
                message: "expected a JSON object".into(),
            });
        };
        records.push(InstructionRecord {
            instruction: field(&obj, "instruction", path, line_no)?,
            input: field(&obj, "input", path, line_no)?,
            output: field(&obj, "output", path, line_no)?,
            encounter_id: field(&obj, "id", path, line_no)?,
        });
    }
    Ok(records)
}
