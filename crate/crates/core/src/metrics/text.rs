use crate::dialogue::normalize_text;

use super::rouge::split_sentences;
use super::stem::porter_stem;

const STOPWORDS: &[&str] = &[
    "a", "about", "above", "after", "again", "against", "all", "am", "an", "and", "any", "are", "as", "at",
    "be", "because", "been", "before", "being", "below", "between", "both", "but", "by", "can", "did", "do",
    "does", "doing", "down", "during", "each", "few", "for", "from", "further", "had", "has", "have",
    "having", "he", "her", "here", "hers", "herself", "him", "himself", "his", "how", "i", "if", "in",
    "into", "is", "it", "its", "itself", "just", "me", "more", "most", "my", "myself", "no", "nor", "not",
    "now", "of", "off", "on", "once", "only", "or", "other", "our", "ours", "ourselves", "out", "over",
    "own", "same", "she", "should", "so", "some", "such", "than", "that", "the", "their", "theirs", "them",
    "themselves", "then", "there", "these", "they", "this", "those", "through", "to", "too", "under",
    "until", "up", "very", "was", "we", "were", "what", "when", "where", "which", "while", "who", "whom",
    "why", "will", "with", "you", "your", "yours", "yourself", "yourselves",
];

pub fn is_stopword(token: &str) -> bool {
    STOPWORDS.binary_search(&token).is_ok()
}

/// Turns raw text into scoring tokens: normalize, split on whitespace,
/// then optionally drop stopwords and stem.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TextProcessor {
    pub stemming: bool,
    pub stopwords: bool,
}

impl TextProcessor {
    pub fn tokens(&self, text: &str) -> Vec<String> {
        normalize_text(text)
            .split_whitespace()
            .filter(|t| !(self.stopwords && is_stopword(t)))
            .map(|t| if self.stemming { porter_stem(t) } else { t.to_string() })
            .collect()
    }

    /// Sentences are split on the raw text, before normalization folds
    /// newlines away.
    pub fn sentences(&self, text: &str) -> Vec<Vec<String>> {
        split_sentences(text)
            .into_iter()
            .map(|s| self.tokens(s))
            .filter(|s| !s.is_empty())
            .collect()
    }
}
