//! BERTScore from precomputed token embeddings.
//!
//! Each token of one side is matched to its most similar token (cosine) on
//! the other side. Precision averages over candidate tokens, recall over
//! reference tokens, optionally IDF-weighted. No baseline rescaling.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Tokens with one embedding vector each, all of the same dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddedSequence {
    tokens: Vec<String>,
    vectors: Vec<Vec<f64>>,
}

impl EmbeddedSequence {
    pub fn new(tokens: Vec<String>, vectors: Vec<Vec<f64>>) -> Result<Self> {
        if tokens.len() != vectors.len() {
            return Err(Error::InvalidArgument(format!(
                "{} tokens but {} vectors",
                tokens.len(),
                vectors.len()
            )));
        }
        if tokens.is_empty() {
            return Err(Error::InvalidArgument("embedded sequence is empty".into()));
        }
        let dim = vectors[0].len();
        if dim == 0 {
            return Err(Error::InvalidArgument("embedding dimension is 0".into()));
        }
        for (i, v) in vectors.iter().enumerate() {
            if v.len() != dim {
                return Err(Error::InvalidArgument(format!(
                    "vector {i} has dimension {} (expected {dim})",
                    v.len()
                )));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidArgument(format!("vector {i} has a non-finite entry")));
            }
            if v.iter().all(|&x| x == 0.0) {
                return Err(Error::InvalidArgument(format!("vector {i} is all zeros")));
            }
        }
        Ok(Self { tokens, vectors })
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn dim(&self) -> usize {
        self.vectors[0].len()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    fn squared_norms(&self) -> Vec<f64> {
        self.vectors.iter().map(|v| dot(v, v)).collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BertScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Inverse document frequencies over a reference collection.
#[derive(Debug, Clone, PartialEq)]
pub struct IdfWeights {
    weights: HashMap<String, f64>,
    unseen: f64,
}

impl IdfWeights {
    /// `log((N + 1) / (df + 1))`; tokens never seen get `log(N + 1)`.
    pub fn weight(&self, token: &str) -> f64 {
        self.weights.get(token).copied().unwrap_or(self.unseen)
    }
}

pub fn idf_weights<S: AsRef<str>>(references: &[Vec<S>]) -> Result<IdfWeights> {
    if references.is_empty() {
        return Err(Error::InvalidArgument("IDF needs at least one reference".into()));
    }
    let n = references.len() as f64;
    let mut df: HashMap<String, usize> = HashMap::new();
    for doc in references {
        let unique: HashSet<&str> = doc.iter().map(AsRef::as_ref).collect();
        for token in unique {
            *df.entry(token.to_string()).or_insert(0) += 1;
        }
    }
    Ok(IdfWeights {
        weights: df
            .into_iter()
            .map(|(t, d)| (t, ((n + 1.0) / (d as f64 + 1.0)).ln()))
            .collect(),
        unseen: (n + 1.0).ln(),
    })
}

/// Per-token weights summing to 1. Falls back to uniform when every IDF
/// weight on the side is zero.
fn side_weights(seq: &EmbeddedSequence, idf: Option<&IdfWeights>) -> Vec<f64> {
    let uniform = || vec![1.0 / seq.len() as f64; seq.len()];
    let Some(idf) = idf else {
        return uniform();
    };
    let raw: Vec<f64> = seq.tokens.iter().map(|t| idf.weight(t)).collect();
    let total: f64 = raw.iter().sum();
    if total > 0.0 {
        raw.into_iter().map(|w| w / total).collect()
    } else {
        uniform()
    }
}

pub fn bert_score(
    candidate: &EmbeddedSequence,
    reference: &EmbeddedSequence,
    idf: Option<&IdfWeights>,
) -> Result<BertScore> {
    if candidate.is_empty() || reference.is_empty() {
        return Err(Error::InvalidArgument("BERTScore needs non-empty sequences".into()));
    }
    if candidate.dim() != reference.dim() {
        return Err(Error::InvalidArgument(format!(
            "embedding dimensions differ: candidate {} vs reference {}",
            candidate.dim(),
            reference.dim()
        )));
    }
    let (cand_sq, ref_sq) = (candidate.squared_norms(), reference.squared_norms());

    let mut best_for_cand = vec![f64::NEG_INFINITY; candidate.len()];
    let mut best_for_ref = vec![f64::NEG_INFINITY; reference.len()];
    for (i, c) in candidate.vectors.iter().enumerate() {
        for (j, r) in reference.vectors.iter().enumerate() {
            // sqrt(x²) is exact, so a vector against itself gives exactly 1
            let sim = (dot(c, r) / (cand_sq[i] * ref_sq[j]).sqrt()).clamp(-1.0, 1.0);
            best_for_cand[i] = best_for_cand[i].max(sim);
            best_for_ref[j] = best_for_ref[j].max(sim);
        }
    }

    // dividing by the weight sum keeps a perfect match at exactly 1
    let weighted = |best: &[f64], weights: Vec<f64>| -> f64 {
        let total: f64 = weights.iter().sum();
        best.iter().zip(&weights).map(|(s, w)| s * w).sum::<f64>() / total
    };
    let precision = weighted(&best_for_cand, side_weights(candidate, idf));
    let recall = weighted(&best_for_ref, side_weights(reference, idf));
    let f1 = if precision + recall != 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(BertScore {
        precision,
        recall,
        f1,
    })
}
