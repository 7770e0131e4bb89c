//! The four simplification attributes of an aligned pair.
//!
//! * `len`: target length minus mean source length, in tokens.
//! * `comp`: mean lexicon complexity of the target minus that of the sources.
//! * `freq`: mean odds ratio of the target minus that of the sources.
//! * `sari`: SARI of the target against references, with the stitched
//!   sources as input.
//!
//! Lower `len`, `comp` and `freq` and higher `sari` indicate stronger
//! simplification.

mod lexicon;
mod odds;
mod references;
mod sari;

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use lexicon::ComplexityLexicon;
pub use odds::{build_odds_dict, odds_ratio, OddsEntry, OddsRatioDict, WordCounts, DEFAULT_FLOOR};
pub use references::{generate_references, ReferenceSource};
pub use sari::{order_scores, sari, sari_tokens, OrderScores, SariScore};

use crate::aligner::AlignedPair;
use crate::corpus::{ParallelPair, SentenceRecord};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AttributeError {
    #[error("SARI needs at least one reference")]
    NoReferences,
    #[error("no reference for pair {0}")]
    MissingReference(String),
    #[error("reference corpus is empty")]
    EmptyCorpus,
    #[error("complexity lexicon: {0}")]
    Lexicon(String),
    #[error("odds dictionary: {0}")]
    OddsDict(String),
    #[error("reference file: {0}")]
    ReferenceFile(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

impl AttributeError {
    pub(crate) fn io(path: &Path, e: std::io::Error) -> Self {
        Self::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Attribute {
    Len,
    Comp,
    Freq,
    Sari,
}

impl Attribute {
    pub const ALL: [Attribute; 4] = [
        Attribute::Len,
        Attribute::Comp,
        Attribute::Freq,
        Attribute::Sari,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Attribute::Len => "len",
            Attribute::Comp => "comp",
            Attribute::Freq => "freq",
            Attribute::Sari => "sari",
        }
    }

    pub fn higher_is_simpler(self) -> bool {
        self == Attribute::Sari
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.as_str() == s)
    }
}

impl fmt::Display for Attribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttributeVector {
    pub len: f64,
    pub comp: f64,
    pub freq: f64,
    pub sari: f64,
}

impl AttributeVector {
    pub fn get(&self, a: Attribute) -> f64 {
        match a {
            Attribute::Len => self.len,
            Attribute::Comp => self.comp,
            Attribute::Freq => self.freq,
            Attribute::Sari => self.sari,
        }
    }
}

/// A pair seen as one or more sources and a target.
pub trait PairSides {
    fn pair_id(&self) -> String;
    /// In document order.
    fn sources(&self) -> &[SentenceRecord];
    fn target(&self) -> &SentenceRecord;
}

impl PairSides for AlignedPair {
    fn pair_id(&self) -> String {
        AlignedPair::pair_id(self)
    }

    fn sources(&self) -> &[SentenceRecord] {
        &self.sources
    }

    fn target(&self) -> &SentenceRecord {
        &self.target
    }
}

impl PairSides for ParallelPair {
    fn pair_id(&self) -> String {
        self.id.clone()
    }

    fn sources(&self) -> &[SentenceRecord] {
        std::slice::from_ref(&self.source)
    }

    fn target(&self) -> &SentenceRecord {
        &self.target
    }
}

fn pooled_words(sources: &[SentenceRecord]) -> impl Iterator<Item = &str> {
    sources.iter().flat_map(SentenceRecord::word_tokens)
}

pub fn attr_length(pair: &impl PairSides) -> f64 {
    let sources = pair.sources();
    let mean =
        sources.iter().map(|s| s.token_len() as f64).sum::<f64>() / sources.len().max(1) as f64;
    pair.target().token_len() as f64 - mean
}

pub fn attr_complexity(pair: &impl PairSides, lex: &ComplexityLexicon) -> f64 {
    lex.average(pair.target().word_tokens()) - lex.average(pooled_words(pair.sources()))
}

pub fn attr_frequency(pair: &impl PairSides, dict: &OddsRatioDict) -> f64 {
    dict.average(pair.target().word_tokens()) - dict.average(pooled_words(pair.sources()))
}

/// Sources joined with single spaces, as one sentence.
pub fn stitched_input(pair: &impl PairSides) -> SentenceRecord {
    let sources = pair.sources();
    if let [single] = sources {
        return single.clone();
    }
    let raw: Vec<&str> = sources.iter().map(SentenceRecord::raw).collect();
    SentenceRecord::new(format!("stitched:{}", pair.pair_id()), raw.join(" "))
}

pub fn attr_sari(
    pair: &impl PairSides,
    refs: &[SentenceRecord],
) -> Result<SariScore, AttributeError> {
    sari(&stitched_input(pair), pair.target(), refs)
}

/// Shared read-only inputs for attribute computation.
#[derive(Debug, Clone)]
pub struct AttributeResources {
    pub lexicon: ComplexityLexicon,
    pub odds: OddsRatioDict,
    pub references: ReferenceSource,
}

pub fn compute_attributes(
    pair: &impl PairSides,
    lex: &ComplexityLexicon,
    dict: &OddsRatioDict,
    refs: &[SentenceRecord],
) -> Result<AttributeVector, AttributeError> {
    Ok(AttributeVector {
        len: attr_length(pair),
        comp: attr_complexity(pair, lex),
        freq: attr_frequency(pair, dict),
        sari: attr_sari(pair, refs)?.sari,
    })
}

impl AttributeResources {
    pub fn compute(&self, pair: &impl PairSides) -> Result<AttributeVector, AttributeError> {
        let refs = self.references.refs_for(&pair.pair_id(), pair.target())?;
        compute_attributes(pair, &self.lexicon, &self.odds, &refs)
    }
}
