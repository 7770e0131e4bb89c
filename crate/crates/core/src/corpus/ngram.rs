use std::collections::HashMap;

use super::SentenceRecord;

/// Highest n-gram order used anywhere in the pipeline.
pub const MAX_ORDER: usize = 4;

/// Multiset of contiguous token n-grams of a single order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct NGramMultiset {
    n: usize,
    counts: HashMap<Vec<String>, usize>,
}

impl NGramMultiset {
    /// Counts the n-grams of `tokens`. Orders outside `1..=MAX_ORDER` panic.
    pub fn from_tokens<S: AsRef<str>>(tokens: &[S], n: usize) -> Self {
        assert!(
            (1..=MAX_ORDER).contains(&n),
            "n-gram order must be in 1..={MAX_ORDER}, got {n}"
        );
        let mut counts = HashMap::new();
        if tokens.len() >= n {
            for window in tokens.windows(n) {
                let gram: Vec<String> = window.iter().map(|t| t.as_ref().to_string()).collect();
                *counts.entry(gram).or_insert(0) += 1;
            }
        }
        Self { n, counts }
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn count(&self, gram: &[String]) -> usize {
        self.counts.get(gram).copied().unwrap_or(0)
    }

    /// Sum of all multiplicities.
    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vec<String>, usize)> {
        self.counts.iter().map(|(k, v)| (k, *v))
    }

    pub fn contains(&self, gram: &[String]) -> bool {
        self.counts.contains_key(gram)
    }
}

/// Contiguous n-grams of a sentence's tokens, with multiplicity.
pub fn extract_ngrams(sentence: &SentenceRecord, n: usize) -> NGramMultiset {
    NGramMultiset::from_tokens(sentence.tokens(), n)
}
