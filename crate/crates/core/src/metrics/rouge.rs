use std::collections::{BTreeSet, HashMap};
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Precision, recall and F1 of one ROUGE variant, each in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RougeScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl RougeScore {
    /// Ratios from an overlap count; an empty side yields 0 for its ratio.
    pub fn from_counts(overlap: usize, candidate_total: usize, reference_total: usize) -> Self {
        let ratio = |total: usize| if total > 0 { overlap as f64 / total as f64 } else { 0.0 };
        Self::from_pr(ratio(candidate_total), ratio(reference_total))
    }

    pub fn from_pr(precision: f64, recall: f64) -> Self {
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Self {
            precision,
            recall,
            f1,
        }
    }
}

/// All contiguous n-grams with their multiplicities.
pub fn ngram_counts<T: Eq + Hash>(tokens: &[T], n: usize) -> Result<HashMap<&[T], usize>> {
    if n == 0 {
        return Err(Error::InvalidArgument("n-gram order must be at least 1".into()));
    }
    let mut counts = HashMap::new();
    for gram in tokens.windows(n) {
        *counts.entry(gram).or_insert(0) += 1;
    }
    Ok(counts)
}

/// ROUGE-N with clipped n-gram overlap.
pub fn rouge_n<T: Eq + Hash>(candidate: &[T], reference: &[T], n: usize) -> Result<RougeScore> {
    let cand = ngram_counts(candidate, n)?;
    let refs = ngram_counts(reference, n)?;
    let overlap: usize = cand
        .iter()
        .filter_map(|(gram, &c)| refs.get(gram).map(|&r| c.min(r)))
        .sum();
    Ok(RougeScore::from_counts(
        overlap,
        cand.values().sum(),
        refs.values().sum(),
    ))
}

fn lcs_table<T: Eq>(a: &[T], b: &[T]) -> Vec<Vec<usize>> {
    let mut table = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            table[i][j] = if a[i - 1] == b[j - 1] {
                table[i - 1][j - 1] + 1
            } else {
                table[i - 1][j].max(table[i][j - 1])
            };
        }
    }
    table
}

/// Length of the longest common subsequence.
pub fn lcs_length<T: Eq>(a: &[T], b: &[T]) -> usize {
    let (long, short) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    let mut prev = vec![0usize; short.len() + 1];
    let mut cur = vec![0usize; short.len() + 1];
    for x in long {
        for (j, y) in short.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { prev[j + 1].max(cur[j]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[short.len()]
}

/// Positions in `reference` of one longest common subsequence with
/// `candidate`, ascending.
///
/// The table is walked back from the ends of both sequences, taking a match
/// whenever the tokens agree and otherwise dropping a reference token unless
/// that would shorten the LCS. This is the alignment the reference ROUGE
/// toolkit uses for summary-level scoring.
pub fn lcs_indices<T: Eq>(reference: &[T], candidate: &[T]) -> Vec<usize> {
    let table = lcs_table(reference, candidate);
    let (mut i, mut j) = (reference.len(), candidate.len());
    let mut out = Vec::with_capacity(table[i][j]);
    while i > 0 && j > 0 {
        if reference[i - 1] == candidate[j - 1] {
            out.push(i - 1);
            i -= 1;
            j -= 1;
        } else if table[i][j - 1] > table[i - 1][j] {
            j -= 1;
        } else {
            i -= 1;
        }
    }
    out.reverse();
    out
}

/// Splits text into sentences at newlines and at `.`, `?` or `!` followed
/// by whitespace. Terminal punctuation stays with its sentence; blank
/// sentences are dropped.
pub fn split_sentences(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    for line in text.lines() {
        let mut start = 0;
        let mut chars = line.char_indices().peekable();
        while let Some((i, c)) = chars.next() {
            if matches!(c, '.' | '?' | '!') && chars.peek().is_some_and(|&(_, n)| n.is_whitespace()) {
                let end = i + c.len_utf8();
                out.push(&line[start..end]);
                start = end;
            }
        }
        out.push(&line[start..]);
    }
    out.into_iter().map(str::trim).filter(|s| !s.is_empty()).collect()
}

/// Summary-level ROUGE-L over pre-split, pre-tokenized sentences.
///
/// For each reference sentence the LCS positions against every candidate
/// sentence are unioned; each unioned token counts as a hit only while both
/// sides still have unused occurrences of it.
pub fn rouge_lsum_tokens<T: Eq + Hash>(candidate: &[Vec<T>], reference: &[Vec<T>]) -> RougeScore {
    let ref_total: usize = reference.iter().map(Vec::len).sum();
    let cand_total: usize = candidate.iter().map(Vec::len).sum();
    if ref_total == 0 || cand_total == 0 {
        return RougeScore::default();
    }

    let mut ref_left: HashMap<&T, usize> = HashMap::new();
    for t in reference.iter().flatten() {
        *ref_left.entry(t).or_insert(0) += 1;
    }
    let mut cand_left: HashMap<&T, usize> = HashMap::new();
    for t in candidate.iter().flatten() {
        *cand_left.entry(t).or_insert(0) += 1;
    }

    let mut hits = 0;
    for sentence in reference {
        let union: BTreeSet<usize> = candidate
            .iter()
            .flat_map(|c| lcs_indices(sentence, c))
            .collect();
        for i in union {
            let token = &sentence[i];
            let (Some(r), Some(c)) = (ref_left.get(token).copied(), cand_left.get(token).copied()) else {
                continue;
            };
            if r > 0 && c > 0 {
                hits += 1;
                ref_left.insert(token, r - 1);
                cand_left.insert(token, c - 1);
            }
        }
    }
    RougeScore::from_counts(hits, cand_total, ref_total)
}

/// Summary-level ROUGE-L on raw text: sentences per [`split_sentences`],
/// tokens by whitespace.
pub fn rouge_lsum(candidate: &str, reference: &str) -> RougeScore {
    let tokenize = |text: &str| -> Vec<Vec<String>> {
        split_sentences(text)
            .into_iter()
            .map(|s| s.split_whitespace().map(str::to_string).collect())
            .collect()
    };
    rouge_lsum_tokens(&tokenize(candidate), &tokenize(reference))
}
