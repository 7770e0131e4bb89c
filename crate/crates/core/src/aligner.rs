//! Summary-to-document sentence alignment.
//!
//! For every summary sentence the document sentence with the highest
//! similarity (`d_max`) decides the branch:
//!
//! * `d_max > s_max`: the best sentence alone is the source.
//! * `s_min < d_max <= s_max`: the best sentence is kept and the next-best
//!   sentences are stitched in one at a time (in document order). A
//!   candidate is accepted only while the stitched text still scores above
//!   `s_add` against the summary sentence, and never beyond `l_max` sources.
//! * otherwise there is no alignment.
//!
//! The baseline strategy keeps every document sentence scoring above a
//! single cutoff, with no cap.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{DocumentRecord, SentenceRecord};
use crate::embedding::{similarity, EmbeddingError, EmbeddingProvider};

/// Similarity of candidate texts against one target text.
pub trait SimilarityScorer: Send + Sync {
    /// One score per candidate, each clamped to `[-1, 1]`.
    fn score(&self, candidates: &[&str], target: &str) -> Result<Vec<f64>, EmbeddingError>;

    fn model_id(&self) -> String;
}

/// Cosine similarity over any embedding provider.
pub struct EmbeddingScorer<P> {
    provider: P,
}

impl<P: EmbeddingProvider> EmbeddingScorer<P> {
    pub fn new(provider: P) -> Self {
        Self { provider }
    }

    pub fn provider(&self) -> &P {
        &self.provider
    }
}

impl<P: EmbeddingProvider> SimilarityScorer for EmbeddingScorer<P> {
    fn score(&self, candidates: &[&str], target: &str) -> Result<Vec<f64>, EmbeddingError> {
        let mut texts = Vec::with_capacity(candidates.len() + 1);
        texts.push(target);
        texts.extend_from_slice(candidates);
        let vectors = self.provider.embed_batch(&texts)?;
        let (target_vec, rest) = vectors.split_first().expect("non-empty batch");
        rest.iter().map(|v| similarity(v, target_vec)).collect()
    }

    fn model_id(&self) -> String {
        self.provider.model_id()
    }
}

/// Scorer answering from a fixed table keyed by `(candidate, target)` text.
/// Unknown pairs fail with `ProviderMiss`.
#[derive(Debug, Clone, Default)]
pub struct ScriptedScorer {
    table: HashMap<(String, String), f64>,
}

impl ScriptedScorer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, candidate: impl Into<String>, target: impl Into<String>, sim: f64) {
        self.table.insert((candidate.into(), target.into()), sim);
    }

    pub fn with(
        mut self,
        candidate: impl Into<String>,
        target: impl Into<String>,
        sim: f64,
    ) -> Self {
        self.set(candidate, target, sim);
        self
    }
}

impl SimilarityScorer for ScriptedScorer {
    fn score(&self, candidates: &[&str], target: &str) -> Result<Vec<f64>, EmbeddingError> {
        candidates
            .iter()
            .map(|c| {
                self.table
                    .get(&((*c).to_string(), target.to_string()))
                    .map(|s| s.clamp(-1.0, 1.0))
                    .ok_or_else(|| EmbeddingError::ProviderMiss(format!("{c} => {target}")))
            })
            .collect()
    }

    fn model_id(&self) -> String {
        "scripted".into()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Algorithm1,
    #[serde(alias = "baseline")]
    BaselineThreshold,
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Algorithm1 => "algorithm1",
            Strategy::BaselineThreshold => "baseline_threshold",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error(
        "alignment thresholds must lie in [0, 1] (s_min={s_min}, s_add={s_add}, s_max={s_max})"
    )]
    OutOfRange { s_min: f64, s_add: f64, s_max: f64 },
    #[error("s_min ({s_min}) must be below s_max ({s_max})")]
    MinNotBelowMax { s_min: f64, s_max: f64 },
    #[error("s_add ({s_add}) must lie in [s_min, s_max] = [{s_min}, {s_max}]")]
    AddOutsideRange { s_min: f64, s_add: f64, s_max: f64 },
    #[error("l_max must be at least 1")]
    ZeroCap,
    #[error("baseline cutoff {0} must lie in [0, 1]")]
    Cutoff(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AlignmentConfig {
    pub s_max: f64,
    pub s_min: f64,
    pub s_add: f64,
    pub l_max: usize,
    pub strategy: Strategy,
    pub baseline_cutoff: f64,
}

impl Default for AlignmentConfig {
    fn default() -> Self {
        Self {
            s_max: 0.8,
            s_min: 0.6,
            s_add: 0.7,
            l_max: 3,
            strategy: Strategy::Algorithm1,
            baseline_cutoff: 0.6,
        }
    }
}

impl AlignmentConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if !(unit(self.s_min) && unit(self.s_add) && unit(self.s_max)) {
            return Err(ConfigError::OutOfRange {
                s_min: self.s_min,
                s_add: self.s_add,
                s_max: self.s_max,
            });
        }
        if self.s_min >= self.s_max {
            return Err(ConfigError::MinNotBelowMax {
                s_min: self.s_min,
                s_max: self.s_max,
            });
        }
        if self.s_add < self.s_min || self.s_add > self.s_max {
            return Err(ConfigError::AddOutsideRange {
                s_min: self.s_min,
                s_add: self.s_add,
                s_max: self.s_max,
            });
        }
        if self.l_max == 0 {
            return Err(ConfigError::ZeroCap);
        }
        if !unit(self.baseline_cutoff) {
            return Err(ConfigError::Cutoff(self.baseline_cutoff));
        }
        Ok(())
    }
}

/// Sources aligned to one summary sentence.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedPair {
    pub doc_id: String,
    pub target_index: usize,
    pub target: SentenceRecord,
    /// In document order.
    pub sources: Vec<SentenceRecord>,
    /// Strictly increasing.
    pub source_indices: Vec<usize>,
    /// Highest single-sentence similarity to the target.
    pub max_similarity: f64,
    /// Similarity of the stitched sources to the target.
    pub final_similarity: f64,
    pub strategy: Strategy,
}

impl AlignedPair {
    pub fn pair_id(&self) -> String {
        pair_id(&self.doc_id, self.target_index)
    }

    /// Sources joined with single spaces.
    pub fn stitched_source(&self) -> String {
        join_raw(self.sources.iter())
    }

    pub fn to_record(&self) -> AlignedPairRecord {
        AlignedPairRecord {
            pair_id: self.pair_id(),
            doc_id: self.doc_id.clone(),
            target_index: self.target_index,
            target: self.target.raw().to_string(),
            sources: self.sources.iter().map(|s| s.raw().to_string()).collect(),
            source_indices: self.source_indices.clone(),
            d_max: self.max_similarity,
            final_sim: self.final_similarity,
            strategy: self.strategy,
        }
    }
}

pub fn pair_id(doc_id: &str, target_index: usize) -> String {
    format!("{doc_id}#{target_index}")
}

/// One line of the aligned-pairs JSON Lines file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignedPairRecord {
    pub pair_id: String,
    pub doc_id: String,
    pub target_index: usize,
    pub target: String,
    pub sources: Vec<String>,
    pub source_indices: Vec<usize>,
    pub d_max: f64,
    pub final_sim: f64,
    pub strategy: Strategy,
}

impl AlignedPairRecord {
    /// Rebuilds the pair, re-tokenizing every sentence.
    pub fn into_pair(self) -> AlignedPair {
        let sources = self
            .sources
            .iter()
            .zip(&self.source_indices)
            .map(|(raw, i)| SentenceRecord::new(format!("{}/d{i}", self.doc_id), raw.as_str()))
            .collect();
        AlignedPair {
            target: SentenceRecord::new(
                format!("{}/s{}", self.doc_id, self.target_index),
                self.target.as_str(),
            ),
            sources,
            source_indices: self.source_indices,
            max_similarity: self.d_max,
            final_similarity: self.final_sim,
            strategy: self.strategy,
            doc_id: self.doc_id,
            target_index: self.target_index,
        }
    }
}

/// A summary sentence that could not be aligned because scoring failed.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("alignment skipped for {pair_id}: {cause}")]
pub struct AlignmentSkipped {
    pub pair_id: String,
    pub cause: EmbeddingError,
}

fn join_raw<'a>(sentences: impl Iterator<Item = &'a SentenceRecord>) -> String {
    sentences
        .map(SentenceRecord::raw)
        .collect::<Vec<_>>()
        .join(" ")
}

fn stitch(doc: &DocumentRecord, indices: &[usize]) -> String {
    join_raw(indices.iter().map(|&i| &doc.doc_sentences[i]))
}

fn build_pair(
    doc: &DocumentRecord,
    target_index: usize,
    indices: Vec<usize>,
    max_similarity: f64,
    final_similarity: f64,
    strategy: Strategy,
) -> AlignedPair {
    AlignedPair {
        doc_id: doc.doc_id.clone(),
        target_index,
        target: doc.summary_sentences[target_index].clone(),
        sources: indices
            .iter()
            .map(|&i| doc.doc_sentences[i].clone())
            .collect(),
        source_indices: indices,
        max_similarity,
        final_similarity,
        strategy,
    }
}

/// Runs the configured strategy for summary sentence `target_index`.
/// `Ok(None)` means no document sentence is similar enough.
pub fn align_summary_sentence(
    doc: &DocumentRecord,
    target_index: usize,
    cfg: &AlignmentConfig,
    scorer: &dyn SimilarityScorer,
) -> Result<Option<AlignedPair>, AlignmentSkipped> {
    match cfg.strategy {
        Strategy::Algorithm1 => align_stitched(doc, target_index, cfg, scorer),
        Strategy::BaselineThreshold => {
            align_baseline(doc, target_index, cfg.baseline_cutoff, scorer)
        }
    }
}

fn sentence_scores(
    doc: &DocumentRecord,
    target: &str,
    scorer: &dyn SimilarityScorer,
) -> Result<Vec<f64>, EmbeddingError> {
    let texts: Vec<&str> = doc.doc_sentences.iter().map(SentenceRecord::raw).collect();
    let sims = scorer.score(&texts, target)?;
    if sims.len() != texts.len() {
        return Err(EmbeddingError::ProviderUnavailable(format!(
            "scorer returned {} scores for {} sentences",
            sims.len(),
            texts.len()
        )));
    }
    Ok(sims)
}

fn align_stitched(
    doc: &DocumentRecord,
    target_index: usize,
    cfg: &AlignmentConfig,
    scorer: &dyn SimilarityScorer,
) -> Result<Option<AlignedPair>, AlignmentSkipped> {
    let target = doc.summary_sentences[target_index].raw();
    let skipped = |cause| AlignmentSkipped {
        pair_id: pair_id(&doc.doc_id, target_index),
        cause,
    };
    if doc.doc_sentences.is_empty() {
        return Ok(None);
    }
    let sims = sentence_scores(doc, target, scorer).map_err(skipped)?;

    // Descending similarity; ties go to the lower document index.
    let mut ranked: Vec<usize> = (0..sims.len()).collect();
    ranked.sort_by(|&a, &b| sims[b].total_cmp(&sims[a]).then(a.cmp(&b)));
    let best = ranked[0];
    let d_max = sims[best];

    if d_max > cfg.s_max {
        return Ok(Some(build_pair(
            doc,
            target_index,
            vec![best],
            d_max,
            d_max,
            Strategy::Algorithm1,
        )));
    }
    if d_max <= cfg.s_min {
        return Ok(None);
    }

    let mut chosen = vec![best];
    let mut final_sim = d_max;
    for &candidate in &ranked[1..] {
        if chosen.len() >= cfg.l_max {
            break;
        }
        let mut trial = chosen.clone();
        let pos = trial.partition_point(|&i| i < candidate);
        trial.insert(pos, candidate);
        let text = stitch(doc, &trial);
        let c = scorer.score(&[text.as_str()], target).map_err(skipped)?[0];
        if c > cfg.s_add {
            chosen = trial;
            final_sim = c;
        } else {
            break;
        }
    }
    Ok(Some(build_pair(
        doc,
        target_index,
        chosen,
        d_max,
        final_sim,
        Strategy::Algorithm1,
    )))
}

/// Keeps every document sentence scoring strictly above `cutoff`, in
/// document order and without a cap.
pub fn align_baseline(
    doc: &DocumentRecord,
    target_index: usize,
    cutoff: f64,
    scorer: &dyn SimilarityScorer,
) -> Result<Option<AlignedPair>, AlignmentSkipped> {
    let target = doc.summary_sentences[target_index].raw();
    let skipped = |cause| AlignmentSkipped {
        pair_id: pair_id(&doc.doc_id, target_index),
        cause,
    };
    if doc.doc_sentences.is_empty() {
        return Ok(None);
    }
    let sims = sentence_scores(doc, target, scorer).map_err(skipped)?;
    let kept: Vec<usize> = (0..sims.len()).filter(|&i| sims[i] > cutoff).collect();
    if kept.is_empty() {
        return Ok(None);
    }
    let d_max = sims.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let final_sim = if kept.len() == 1 {
        sims[kept[0]]
    } else {
        let text = stitch(doc, &kept);
        scorer.score(&[text.as_str()], target).map_err(skipped)?[0]
    };
    Ok(Some(build_pair(
        doc,
        target_index,
        kept,
        d_max,
        final_sim,
        Strategy::BaselineThreshold,
    )))
}

/// Alignment outcome for one document.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DocumentAlignment {
    pub pairs: Vec<AlignedPair>,
    pub unaligned: usize,
    pub skipped: Vec<AlignmentSkipped>,
}

/// Aligns every summary sentence independently. Document sentences may be
/// reused across summary sentences.
pub fn align_document(
    doc: &DocumentRecord,
    cfg: &AlignmentConfig,
    scorer: &dyn SimilarityScorer,
) -> DocumentAlignment {
    let mut out = DocumentAlignment::default();
    for j in 0..doc.summary_sentences.len() {
        match align_summary_sentence(doc, j, cfg, scorer) {
            Ok(Some(pair)) => out.pairs.push(pair),
            Ok(None) => out.unaligned += 1,
            Err(e) => {
                log::warn!("{e}");
                out.skipped.push(e);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::Strategy;
    use super::*;
    use proptest::prelude::*;

    fn doc(n: usize, summary: &[&str]) -> DocumentRecord {
        let sentences: Vec<String> = (1..=n).map(|i| format!("d{i}")).collect();
        DocumentRecord::from_sentences(
            "doc",
            sentences.iter().map(String::as_str),
            summary.iter().copied(),
        )
    }

    fn scripted(target: &str, singles: &[f64]) -> ScriptedScorer {
        let mut s = ScriptedScorer::new();
        for (i, &v) in singles.iter().enumerate() {
            s.set(format!("d{}", i + 1), target, v);
        }
        s
    }

    #[test]
    fn default_config_is_valid() {
        let cfg = AlignmentConfig::default();
        assert_eq!(
            (cfg.s_max, cfg.s_min, cfg.s_add, cfg.l_max),
            (0.8, 0.6, 0.7, 3)
        );
        assert_eq!(cfg.baseline_cutoff, 0.6);
        cfg.validate().unwrap();
    }

    #[test]
    fn invalid_configs() {
        let bad = |f: fn(&mut AlignmentConfig)| {
            let mut c = AlignmentConfig::default();
            f(&mut c);
            c.validate().unwrap_err()
        };
        assert!(matches!(
            bad(|c| c.s_min = 0.8),
            ConfigError::MinNotBelowMax { .. }
        ));
        assert!(matches!(
            bad(|c| c.s_add = 0.9),
            ConfigError::AddOutsideRange { .. }
        ));
        assert!(matches!(
            bad(|c| c.s_add = 0.5),
            ConfigError::AddOutsideRange { .. }
        ));
        assert!(matches!(bad(|c| c.l_max = 0), ConfigError::ZeroCap));
        assert!(matches!(
            bad(|c| c.s_max = 1.5),
            ConfigError::OutOfRange { .. }
        ));
    }

    #[test]
    fn high_similarity_single_source() {
        let d = doc(3, &["s1"]);
        let s = scripted("s1", &[0.9, 0.3, 0.2]);
        let p = align_summary_sentence(&d, 0, &AlignmentConfig::default(), &s)
            .unwrap()
            .unwrap();
        assert_eq!(p.source_indices, vec![0]);
        assert_eq!(p.sources[0].raw(), "d1");
        assert_eq!(p.max_similarity, 0.9);
        assert_eq!(p.final_similarity, 0.9);
        assert_eq!(p.pair_id(), "doc#0");
    }

    #[test]
    fn stitching_stops_when_candidate_fails() {
        let d = doc(3, &["s1"]);
        let s = scripted("s1", &[0.7, 0.65, 0.2])
            .with("d1 d2", "s1", 0.75)
            .with("d1 d2 d3", "s1", 0.5);
        let p = align_summary_sentence(&d, 0, &AlignmentConfig::default(), &s)
            .unwrap()
            .unwrap();
        assert_eq!(p.source_indices, vec![0, 1]);
        assert_eq!(p.max_similarity, 0.7);
        assert_eq!(p.final_similarity, 0.75);
        assert_eq!(p.stitched_source(), "d1 d2");
    }

    #[test]
    fn below_lower_threshold_is_unaligned() {
        let d = doc(3, &["s1"]);
        let s = scripted("s1", &[0.55, 0.4, 0.1]);
        assert_eq!(
            align_summary_sentence(&d, 0, &AlignmentConfig::default(), &s).unwrap(),
            None
        );
    }

    #[test]
    fn boundaries_are_strict() {
        let d = doc(2, &["s1"]);
        let cfg = AlignmentConfig::default();
        // d_max == s_min: no alignment.
        let s = scripted("s1", &[0.6, 0.1]);
        assert_eq!(align_summary_sentence(&d, 0, &cfg, &s).unwrap(), None);
        // d_max == s_max: stitching branch; stitch == s_add is rejected.
        let s = scripted("s1", &[0.8, 0.1]).with("d1 d2", "s1", 0.7);
        let p = align_summary_sentence(&d, 0, &cfg, &s).unwrap().unwrap();
        assert_eq!(p.source_indices, vec![0]);
        assert_eq!(p.final_similarity, 0.8);
    }

    #[test]
    fn stitch_preserves_document_order() {
        // Best is d3, runner-up d1: stitched text must read "d1 d3".
        let d = doc(3, &["s1"]);
        let s = scripted("s1", &[0.65, 0.1, 0.7])
            .with("d1 d3", "s1", 0.72)
            .with("d1 d2 d3", "s1", 0.71);
        let p = align_summary_sentence(&d, 0, &AlignmentConfig::default(), &s)
            .unwrap()
            .unwrap();
        assert_eq!(p.source_indices, vec![0, 1, 2]);
        assert_eq!(p.final_similarity, 0.71);
    }

    #[test]
    fn cap_limits_sources() {
        let d = doc(4, &["s1"]);
        let s = scripted("s1", &[0.7, 0.69, 0.68, 0.67])
            .with("d1 d2", "s1", 0.75)
            .with("d1 d2 d3", "s1", 0.76)
            .with("d1 d2 d3 d4", "s1", 0.77);
        let p = align_summary_sentence(&d, 0, &AlignmentConfig::default(), &s)
            .unwrap()
            .unwrap();
        assert_eq!(p.source_indices, vec![0, 1, 2]);
        let cfg = AlignmentConfig {
            l_max: 1,
            ..AlignmentConfig::default()
        };
        let p = align_summary_sentence(&d, 0, &cfg, &s).unwrap().unwrap();
        assert_eq!(p.source_indices, vec![0]);
    }

    #[test]
    fn ties_prefer_lower_index() {
        let d = doc(3, &["s1"]);
        let s = scripted("s1", &[0.3, 0.9, 0.9]);
        let p = align_summary_sentence(&d, 0, &AlignmentConfig::default(), &s)
            .unwrap()
            .unwrap();
        assert_eq!(p.source_indices, vec![1]);
    }

    #[test]
    fn first_stitch_may_fall_below_d_max() {
        let d = doc(2, &["s1"]);
        let s = scripted("s1", &[0.78, 0.5]).with("d1 d2", "s1", 0.71);
        let p = align_summary_sentence(&d, 0, &AlignmentConfig::default(), &s)
            .unwrap()
            .unwrap();
        assert_eq!(p.source_indices, vec![0, 1]);
        assert_eq!(p.final_similarity, 0.71);
    }

    #[test]
    fn scorer_failure_skips_target() {
        let d = doc(2, &["s1"]);
        // Stitched text is not scripted.
        let s = scripted("s1", &[0.7, 0.65]);
        let err = align_summary_sentence(&d, 0, &AlignmentConfig::default(), &s).unwrap_err();
        assert_eq!(err.pair_id, "doc#0");
        assert!(matches!(err.cause, EmbeddingError::ProviderMiss(_)));
    }

    #[test]
    fn document_two_targets_distinct_sources() {
        let d = doc(3, &["s1", "s2"]);
        let s = scripted("s1", &[0.9, 0.1, 0.1])
            .with("d1", "s2", 0.2)
            .with("d2", "s2", 0.1)
            .with("d3", "s2", 0.95);
        let out = align_document(&d, &AlignmentConfig::default(), &s);
        assert_eq!(out.pairs.len(), 2);
        assert_eq!(out.pairs[0].source_indices, vec![0]);
        assert_eq!(out.pairs[1].source_indices, vec![2]);
        assert_eq!(out.pairs[1].target_index, 1);
    }

    #[test]
    fn document_unaligned_sentence_gives_empty_list() {
        let d = doc(2, &["s1"]);
        let s = scripted("s1", &[0.3, 0.2]);
        let out = align_document(&d, &AlignmentConfig::default(), &s);
        assert!(out.pairs.is_empty());
        assert_eq!(out.unaligned, 1);
    }

    #[test]
    fn document_shared_source_allowed() {
        let d = doc(2, &["s1", "s2"]);
        let s = scripted("s1", &[0.9, 0.1])
            .with("d1", "s2", 0.85)
            .with("d2", "s2", 0.3);
        let out = align_document(&d, &AlignmentConfig::default(), &s);
        assert_eq!(out.pairs.len(), 2);
        assert!(out.pairs.iter().all(|p| p.source_indices == vec![0]));
    }

    #[test]
    fn document_records_skips() {
        let d = doc(2, &["s1", "s2"]);
        let s = scripted("s1", &[0.9, 0.1]);
        let out = align_document(&d, &AlignmentConfig::default(), &s);
        assert_eq!(out.pairs.len(), 1);
        assert_eq!(out.skipped.len(), 1);
        assert_eq!(out.skipped[0].pair_id, "doc#1");
    }

    #[test]
    fn baseline_keeps_all_above_cutoff() {
        let d = doc(3, &["s1"]);
        let s = scripted("s1", &[0.7, 0.61, 0.3]).with("d1 d2", "s1", 0.66);
        let p = align_baseline(&d, 0, 0.6, &s).unwrap().unwrap();
        assert_eq!(p.source_indices, vec![0, 1]);
        assert_eq!(p.strategy, Strategy::BaselineThreshold);
        assert_eq!(p.max_similarity, 0.7);
        assert_eq!(p.final_similarity, 0.66);
    }

    #[test]
    fn baseline_none_above_cutoff() {
        let d = doc(3, &["s1"]);
        let s = scripted("s1", &[0.6, 0.5, 0.1]);
        assert_eq!(align_baseline(&d, 0, 0.6, &s).unwrap(), None);
    }

    #[test]
    fn baseline_has_no_cap() {
        let d = doc(10, &["s1"]);
        let joined: Vec<String> = (1..=10).map(|i| format!("d{i}")).collect();
        let s = scripted("s1", &[0.61; 10]).with(joined.join(" "), "s1", 0.62);
        let p = align_baseline(&d, 0, 0.6, &s).unwrap().unwrap();
        assert_eq!(p.sources.len(), 10);
    }

    #[test]
    fn record_round_trip() {
        let d = doc(3, &["s1"]);
        let s = scripted("s1", &[0.7, 0.65, 0.2])
            .with("d1 d2", "s1", 0.75)
            .with("d1 d2 d3", "s1", 0.5);
        let p = align_summary_sentence(&d, 0, &AlignmentConfig::default(), &s)
            .unwrap()
            .unwrap();
        let json = serde_json::to_string(&p.to_record()).unwrap();
        assert!(json.contains("\"strategy\":\"algorithm1\""));
        let back: AlignedPairRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(back.into_pair(), p);
    }

    #[test]
    fn embedding_scorer_with_mock() {
        let scorer = EmbeddingScorer::new(crate::embedding::MockProvider);
        let sims = scorer
            .score(&["the cat sat", "stocks fell"], "the cat sat")
            .unwrap();
        assert!((sims[0] - 1.0).abs() < 1e-12);
        assert!(sims[1] < sims[0]);
    }

    fn random_scorer(n: usize, targets: usize, cells: &[u8]) -> ScriptedScorer {
        // Every subset of sentences gets a score on a 0.05 grid.
        let mut s = ScriptedScorer::new();
        let mut k = 0;
        for t in 0..targets {
            for mask in 1u32..(1 << n) {
                let names: Vec<String> = (0..n)
                    .filter(|i| mask & (1 << i) != 0)
                    .map(|i| format!("d{}", i + 1))
                    .collect();
                s.set(
                    names.join(" "),
                    format!("s{}", t + 1),
                    f64::from(cells[k % cells.len()]) * 0.05,
                );
                k += 1;
            }
        }
        s
    }

    proptest! {
        #[test]
        fn cap_order_and_fast_path(
            n in 1usize..=5,
            cells in proptest::collection::vec(0u8..=20, 64),
            l_max in 1usize..=4,
        ) {
            let d = doc(n, &["s1"]);
            let s = random_scorer(n, 1, &cells);
            let cfg = AlignmentConfig { l_max, ..AlignmentConfig::default() };
            if let Some(p) = align_summary_sentence(&d, 0, &cfg, &s).unwrap() {
                prop_assert!(!p.sources.is_empty() && p.sources.len() <= l_max);
                prop_assert!(p.source_indices.windows(2).all(|w| w[0] < w[1]));
                prop_assert!(p.max_similarity > cfg.s_min);
                if p.max_similarity > cfg.s_max {
                    prop_assert_eq!(p.sources.len(), 1);
                    prop_assert_eq!(p.final_similarity, p.max_similarity);
                }
            }
        }

        #[test]
        fn raising_s_min_never_adds_pairs(
            n in 1usize..=5,
            cells in proptest::collection::vec(0u8..=20, 64),
            lo in 0.3f64..0.65,
            bump in 0.0f64..0.05,
        ) {
            let summary = ["s1", "s2", "s3"];
            let d = doc(n, &summary);
            let s = random_scorer(n, 3, &cells);
            let base = AlignmentConfig { s_min: lo, ..AlignmentConfig::default() };
            let raised = AlignmentConfig { s_min: (lo + bump).min(base.s_add), ..base };
            let a = align_document(&d, &base, &s).pairs.len();
            let b = align_document(&d, &raised, &s).pairs.len();
            prop_assert!(b <= a);
        }
    }
}
