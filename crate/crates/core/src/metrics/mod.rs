//! Note-generation metrics: ROUGE-1, ROUGE-2, ROUGE-Lsum and BERTScore,
//! with corpus-level aggregation.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub mod bertscore;
pub mod embeddings;
pub mod rouge;
pub mod stem;
pub mod text;

pub use bertscore::{bert_score, idf_weights, BertScore, EmbeddedSequence, IdfWeights};
pub use embeddings::{parse_emb_jsonl, read_emb_jsonl, write_emb_jsonl, EmbRecord, EmbeddingSet, Side};
pub use rouge::{lcs_length, ngram_counts, rouge_lsum, rouge_lsum_tokens, rouge_n, split_sentences, RougeScore};
pub use text::TextProcessor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Metric {
    #[serde(rename = "rouge1")]
    Rouge1,
    #[serde(rename = "rouge2")]
    Rouge2,
    #[serde(rename = "rougeLsum")]
    RougeLsum,
    #[serde(rename = "bertscore")]
    BertScore,
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "rouge1" => Ok(Metric::Rouge1),
            "rouge2" => Ok(Metric::Rouge2),
            "rougeLsum" | "rougelsum" => Ok(Metric::RougeLsum),
            "bertscore" => Ok(Metric::BertScore),
            other => Err(Error::Config(format!(
                "unknown metric `{other}` (expected rouge1, rouge2, rougeLsum or bertscore)"
            ))),
        }
    }
}

fn default_metrics() -> Vec<Metric> {
    vec![Metric::Rouge1, Metric::Rouge2, Metric::RougeLsum]
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricConfig {
    #[serde(default = "default_metrics")]
    pub metrics: Vec<Metric>,
    #[serde(default)]
    pub stemming: bool,
    #[serde(default)]
    pub stopwords: bool,
    /// IDF-weight BERTScore by reference-side token document frequency.
    #[serde(default)]
    pub idf: bool,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self {
            metrics: default_metrics(),
            stemming: false,
            stopwords: false,
            idf: false,
        }
    }
}

impl MetricConfig {
    pub fn from_json(json: &str) -> Result<Self> {
        serde_json::from_str(json).map_err(|e| Error::Config(format!("metric config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&crate::io::read_to_string(path)?)
    }

    pub fn wants(&self, metric: Metric) -> bool {
        self.metrics.contains(&metric)
    }

    fn processor(&self) -> TextProcessor {
        TextProcessor {
            stemming: self.stemming,
            stopwords: self.stopwords,
        }
    }
}

/// The requested metrics for one encounter, or their corpus means.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricSet {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rouge1: Option<RougeScore>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rouge2: Option<RougeScore>,
    #[serde(rename = "rougeLsum", skip_serializing_if = "Option::is_none", default)]
    pub rouge_lsum: Option<RougeScore>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub bertscore: Option<BertScore>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub system_name: String,
    /// Encoder behind the BERTScore embeddings, when BERTScore was computed.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub encoder: Option<String>,
    pub per_encounter: BTreeMap<String, MetricSet>,
    pub corpus_mean: MetricSet,
}

fn mean_rouge<'a>(scores: impl Iterator<Item = &'a RougeScore>, n: f64) -> RougeScore {
    let (p, r, f) = scores.fold((0.0, 0.0, 0.0), |(p, r, f), s| (p + s.precision, r + s.recall, f + s.f1));
    RougeScore {
        precision: p / n,
        recall: r / n,
        f1: f / n,
    }
}

fn mean_bert<'a>(scores: impl Iterator<Item = &'a BertScore>, n: f64) -> BertScore {
    let (p, r, f) = scores.fold((0.0, 0.0, 0.0), |(p, r, f), s| (p + s.precision, r + s.recall, f + s.f1));
    BertScore {
        precision: p / n,
        recall: r / n,
        f1: f / n,
    }
}

/// Arithmetic mean of every metric present in all encounters, summed in id
/// order.
pub fn corpus_mean(per_encounter: &BTreeMap<String, MetricSet>) -> MetricSet {
    let n = per_encounter.len() as f64;
    let sets: Vec<&MetricSet> = per_encounter.values().collect();
    if sets.is_empty() {
        return MetricSet::default();
    }
    let all = |get: fn(&MetricSet) -> bool| sets.iter().all(|s| get(s));
    MetricSet {
        rouge1: all(|s| s.rouge1.is_some())
            .then(|| mean_rouge(sets.iter().filter_map(|s| s.rouge1.as_ref()), n)),
        rouge2: all(|s| s.rouge2.is_some())
            .then(|| mean_rouge(sets.iter().filter_map(|s| s.rouge2.as_ref()), n)),
        rouge_lsum: all(|s| s.rouge_lsum.is_some())
            .then(|| mean_rouge(sets.iter().filter_map(|s| s.rouge_lsum.as_ref()), n)),
        bertscore: all(|s| s.bertscore.is_some())
            .then(|| mean_bert(sets.iter().filter_map(|s| s.bertscore.as_ref()), n)),
    }
}

/// Scores one candidate/reference pair with the configured metrics.
pub fn score_pair(
    candidate: &str,
    reference: &str,
    config: &MetricConfig,
    embedded: Option<(&EmbeddedSequence, &EmbeddedSequence)>,
    idf: Option<&IdfWeights>,
) -> Result<MetricSet> {
    let proc = config.processor();
    let mut out = MetricSet::default();
    if config.wants(Metric::Rouge1) || config.wants(Metric::Rouge2) {
        let cand = proc.tokens(candidate);
        let refs = proc.tokens(reference);
        if config.wants(Metric::Rouge1) {
            out.rouge1 = Some(rouge_n(&cand, &refs, 1)?);
        }
        if config.wants(Metric::Rouge2) {
            out.rouge2 = Some(rouge_n(&cand, &refs, 2)?);
        }
    }
    if config.wants(Metric::RougeLsum) {
        out.rouge_lsum = Some(rouge_lsum_tokens(&proc.sentences(candidate), &proc.sentences(reference)));
    }
    if config.wants(Metric::BertScore) {
        let (c, r) = embedded
            .ok_or_else(|| Error::Config("BERTScore requested but no embeddings supplied".into()))?;
        out.bertscore = Some(bert_score(c, r, idf)?);
    }
    Ok(out)
}

/// Scores every candidate against its reference.
///
/// `jobs` sets the worker count (0 = all cores). Results are collected in id
/// order and averaged serially, so the report is bitwise identical for any
/// `jobs`.
pub fn score_corpus(
    system_name: &str,
    candidates: &BTreeMap<String, String>,
    references: &BTreeMap<String, String>,
    config: &MetricConfig,
    embeddings: Option<&EmbeddingSet>,
    jobs: usize,
) -> Result<ScoreReport> {
    if candidates.is_empty() {
        return Err(Error::InvalidArgument("no candidates to score".into()));
    }
    if let Some(id) = candidates.keys().find(|id| !references.contains_key(*id)) {
        return Err(Error::MissingReference(id.clone()));
    }
    let bert = config.wants(Metric::BertScore);
    let embeddings = match (bert, embeddings) {
        (true, None) => {
            return Err(Error::Config("BERTScore requested but no embeddings file supplied".into()))
        }
        (true, Some(set)) => {
            if let Some(id) = candidates.keys().find(|id| set.pair(id).is_none()) {
                return Err(Error::Config(format!(
                    "embeddings file has no candidate/reference pair for `{id}`"
                )));
            }
            Some(set)
        }
        (false, _) => None,
    };
    let idf = match embeddings {
        Some(set) if config.idf => {
            let docs: Vec<Vec<String>> = candidates
                .keys()
                .filter_map(|id| set.pair(id))
                .map(|(_, r)| r.tokens().to_vec())
                .collect();
            Some(idf_weights(&docs)?)
        }
        _ => None,
    };

    let ids: Vec<&String> = candidates.keys().collect();
    let work = || -> Result<Vec<MetricSet>> {
        ids.par_iter()
            .map(|id| {
                score_pair(
                    &candidates[*id],
                    &references[*id],
                    config,
                    embeddings.and_then(|set| set.pair(id)),
                    idf.as_ref(),
                )
                .map_err(|e| e.in_encounter(id))
            })
            .collect()
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let sets = pool.install(work)?;

    let per_encounter: BTreeMap<String, MetricSet> =
        ids.into_iter().cloned().zip(sets).collect();
    Ok(ScoreReport {
        system_name: system_name.to_string(),
        encoder: embeddings.map(|s| s.encoder.clone()),
        corpus_mean: corpus_mean(&per_encounter),
        per_encounter,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(items: &[(&str, &str)]) -> BTreeMap<String, String> {
        items.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn identical_texts_score_one() {
        let texts = map(&[("a", "Knee pain.\nRest and ice."), ("b", "Follow up in two weeks.")]);
        let report = score_corpus("sys", &texts, &texts, &MetricConfig::default(), None, 1).unwrap();
        let mean = report.corpus_mean;
        assert_eq!(mean.rouge1.unwrap().f1, 1.0);
        assert_eq!(mean.rouge2.unwrap().f1, 1.0);
        assert_eq!(mean.rouge_lsum.unwrap().f1, 1.0);
        assert!(mean.bertscore.is_none());
    }

    #[test]
    fn mean_of_perfect_and_disjoint() {
        let refs = map(&[("a", "alpha beta"), ("b", "gamma delta")]);
        let cands = map(&[("a", "alpha beta"), ("b", "epsilon zeta")]);
        let config = MetricConfig {
            metrics: vec![Metric::Rouge1],
            ..Default::default()
        };
        let report = score_corpus("sys", &cands, &refs, &config, None, 2).unwrap();
        assert_eq!(report.corpus_mean.rouge1.unwrap().f1, 0.5);
        assert!(report.corpus_mean.rouge2.is_none());
    }

    #[test]
    fn missing_reference_is_named() {
        let refs = map(&[("a", "x")]);
        let cands = map(&[("a", "x"), ("zz9", "y")]);
        match score_corpus("sys", &cands, &refs, &MetricConfig::default(), None, 1) {
            Err(Error::MissingReference(id)) => assert_eq!(id, "zz9"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bertscore_needs_embeddings() {
        let texts = map(&[("a", "x")]);
        let config = MetricConfig {
            metrics: vec![Metric::BertScore],
            ..Default::default()
        };
        let err = score_corpus("sys", &texts, &texts, &config, None, 1).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn config_json() {
        let c = MetricConfig::from_json(r#"{"metrics": ["rouge1", "rougeLsum", "bertscore"], "idf": true}"#).unwrap();
        assert_eq!(c.metrics, vec![Metric::Rouge1, Metric::RougeLsum, Metric::BertScore]);
        assert!(c.idf && !c.stemming && !c.stopwords);
        assert!(MetricConfig::from_json(r#"{"metrics": ["bleu"]}"#).is_err());
        assert!(MetricConfig::from_json(r#"{"stem": true}"#).is_err());
        assert_eq!(MetricConfig::from_json("{}").unwrap(), MetricConfig::default());
    }

    #[test]
    fn report_serializes_lsum_key() {
        let texts = map(&[("a", "x y")]);
        let report = score_corpus("sys", &texts, &texts, &MetricConfig::default(), None, 1).unwrap();
        let json = serde_json::to_string(&report).unwrap();
        assert!(json.contains("\"rougeLsum\""));
        let back: ScoreReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, report);
    }
}
