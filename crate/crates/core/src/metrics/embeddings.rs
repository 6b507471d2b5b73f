//! EMB-JSONL: per-token embeddings exchanged with the external exporter.
//!
//! ```text
//! {"encoder": "<id>", "dim": 768}
//! {"id": "D2N001", "side": "candidate", "tokens": ["hi", ...], "vectors": [[...], ...]}
//! {"id": "D2N001", "side": "reference", "tokens": [...], "vectors": [...]}
//! ```
//!
//! The first line is the header; every following non-blank line is one
//! record. Records may carry `"empty": true` when the source text was empty.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::bertscore::EmbeddedSequence;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Candidate,
    Reference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbRecord {
    pub id: String,
    pub side: Side,
    pub tokens: Vec<String>,
    pub vectors: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub empty: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EmbeddedPair {
    pub candidate: Option<EmbeddedSequence>,
    pub reference: Option<EmbeddedSequence>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    pub encoder: String,
    pub dim: usize,
    pub pairs: BTreeMap<String, EmbeddedPair>,
    /// Non-fatal oddities such as unknown keys, with line numbers.
    pub warnings: Vec<String>,
}

impl EmbeddingSet {
    /// Both sides for `id`, if present.
    pub fn pair(&self, id: &str) -> Option<(&EmbeddedSequence, &EmbeddedSequence)> {
        let p = self.pairs.get(id)?;
        Some((p.candidate.as_ref()?, p.reference.as_ref()?))
    }
}

const HEADER_KEYS: &[&str] = &["encoder", "dim"];
const RECORD_KEYS: &[&str] = &["id", "side", "tokens", "vectors", "empty"];

fn unknown_keys(obj: &serde_json::Map<String, Value>, known: &[&str], line: usize, warnings: &mut Vec<String>) {
    for key in obj.keys() {
        if !known.contains(&key.as_str()) {
            warnings.push(format!("line {line}: unknown key `{key}`"));
        }
    }
}

pub fn parse_emb_jsonl(text: &str, path: &Path) -> Result<EmbeddingSet> {
    let err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty());

    let (header_line, header) = lines.next().ok_or_else(|| err(1, "missing header line".into()))?;
    let header: Value =
        serde_json::from_str(header).map_err(|e| err(header_line, format!("malformed header: {e}")))?;
    let Value::Object(header) = header else {
        return Err(err(header_line, "header must be a JSON object".into()));
    };
    let encoder = header
        .get("encoder")
        .and_then(Value::as_str)
        .ok_or_else(|| err(header_line, "header needs a string `encoder`".into()))?
        .to_string();
    let dim = header
        .get("dim")
        .and_then(Value::as_u64)
        .filter(|&d| d > 0)
        .ok_or_else(|| err(header_line, "header needs a positive integer `dim`".into()))? as usize;
    let mut warnings = Vec::new();
    unknown_keys(&header, HEADER_KEYS, header_line, &mut warnings);

    let mut pairs: BTreeMap<String, EmbeddedPair> = BTreeMap::new();
    for (line, raw) in lines {
        let value: Value = serde_json::from_str(raw).map_err(|e| err(line, format!("malformed JSON: {e}")))?;
        if let Value::Object(obj) = &value {
            unknown_keys(obj, RECORD_KEYS, line, &mut warnings);
        }
        let record: EmbRecord =
            serde_json::from_value(value).map_err(|e| err(line, format!("bad record: {e}")))?;
        if record.tokens.len() != record.vectors.len() {
            return Err(err(
                line,
                format!("{} tokens but {} vectors", record.tokens.len(), record.vectors.len()),
            ));
        }
        if let Some((i, v)) = record.vectors.iter().enumerate().find(|(_, v)| v.len() != dim) {
            return Err(err(line, format!("vector {i} has length {} but dim is {dim}", v.len())));
        }
        let seq = EmbeddedSequence::new(record.tokens, record.vectors).map_err(|e| err(line, e.to_string()))?;
        let slot = pairs.entry(record.id.clone()).or_default();
        let target = match record.side {
            Side::Candidate => &mut slot.candidate,
            Side::Reference => &mut slot.reference,
        };
        if target.is_some() {
            return Err(err(
                line,
                format!("duplicate {:?} record for `{}`", record.side, record.id),
            ));
        }
        *target = Some(seq);
    }
    Ok(EmbeddingSet {
        encoder,
        dim,
        pairs,
        warnings,
    })
}

pub fn read_emb_jsonl(path: &Path) -> Result<EmbeddingSet> {
    parse_emb_jsonl(&crate::io::read_to_string(path)?, path)
}

pub fn write_emb_jsonl(encoder: &str, dim: usize, records: &[EmbRecord]) -> String {
    let mut out = serde_json::json!({ "encoder": encoder, "dim": dim }).to_string();
    out.push('\n');
    for r in records {
        out.push_str(&serde_json::to_string(r).unwrap());
        out.push('\n');
    }
    out
}
