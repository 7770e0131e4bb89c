//! Corpus ingestion: sentence records, tokenization, segmentation, n-grams
//! and streaming loaders for document-summary and parallel corpora.

mod loader;
mod ngram;
mod segment;
mod tokenize;

pub use loader::{
    load_document_corpus, load_pair_jsonl, load_parallel_corpus, load_parallel_tsv, CorpusError,
    DocumentReader, LoadTally, ParallelReader, RecordError,
};
pub use ngram::{extract_ngrams, NGramMultiset, MAX_ORDER};
pub use segment::{records_from_strings, segment_sentences, split_sentences};
pub use tokenize::{is_word_token, tokenize};

/// One sentence with its lowercased tokens. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentenceRecord {
    id: String,
    raw: String,
    tokens: Vec<String>,
}

impl SentenceRecord {
    pub fn new(id: impl Into<String>, raw: impl Into<String>) -> Self {
        let raw = raw.into();
        let tokens = tokenize(&raw);
        Self {
            id: id.into(),
            raw,
            tokens,
        }
    }

    pub(crate) fn with_id(mut self, id: String) -> Self {
        self.id = id;
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn raw(&self) -> &str {
        &self.raw
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn token_len(&self) -> usize {
        self.tokens.len()
    }

    pub fn char_len(&self) -> usize {
        self.raw.chars().count()
    }

    /// Tokens that contain a letter or digit.
    pub fn word_tokens(&self) -> impl Iterator<Item = &str> {
        self.tokens
            .iter()
            .map(String::as_str)
            .filter(|t| is_word_token(t))
    }
}

/// A document and its summary, each an ordered list of sentences.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocumentRecord {
    pub doc_id: String,
    pub doc_sentences: Vec<SentenceRecord>,
    pub summary_sentences: Vec<SentenceRecord>,
}

impl DocumentRecord {
    /// Builds a record from raw sentence strings, assigning ids
    /// `{doc_id}/d{i}` and `{doc_id}/s{j}`.
    pub fn from_sentences<'a>(
        doc_id: impl Into<String>,
        document: impl IntoIterator<Item = &'a str>,
        summary: impl IntoIterator<Item = &'a str>,
    ) -> Self {
        let doc_id = doc_id.into();
        let doc_sentences = records_from_strings(&format!("{doc_id}/d"), document);
        let summary_sentences = records_from_strings(&format!("{doc_id}/s"), summary);
        Self {
            doc_id,
            doc_sentences,
            summary_sentences,
        }
    }
}

/// One row of a line-aligned complex/simple corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParallelPair {
    pub id: String,
    pub source: SentenceRecord,
    pub target: SentenceRecord,
}

impl ParallelPair {
    pub fn new(id: impl Into<String>, source: &str, target: &str) -> Self {
        let id = id.into();
        Self {
            source: SentenceRecord::new(format!("src:{id}"), source),
            target: SentenceRecord::new(format!("tgt:{id}"), target),
            id,
        }
    }
}
