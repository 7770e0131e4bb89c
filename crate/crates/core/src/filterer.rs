//! Gaussian scoring of attribute values against a reference corpus.
//!
//! Each attribute value φ is scored against the reference mean μ and
//! standard deviation σ. On the simpler side of μ the score is 1; on the
//! other side it is twice the normal tail mass beyond φ, so it decays from 1
//! at μ towards 0. The weighted sum T of the scores is compared with a
//! threshold `t_s`.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use thiserror::Error;

use crate::aligner::{AlignedPair, AlignedPairRecord};
use crate::attributes::{
    Attribute, AttributeError, AttributeResources, AttributeVector, PairSides,
};
use crate::corpus::{CorpusError, ParallelPair};

#[derive(Debug, Error)]
pub enum FilterError {
    #[error("sigma must be positive, got {0}")]
    NonPositiveSigma(f64),
    #[error("reference corpus has {0} usable pairs; at least 2 are needed")]
    EmptyCorpus(usize),
    #[error("attribute {0} has zero variance on the reference corpus")]
    DegenerateAttribute(Attribute),
    #[error("reference statistics lack attribute {0}")]
    MissingStats(Attribute),
    #[error("invalid filter config: {0}")]
    Config(String),
    #[error(transparent)]
    Attribute(#[from] AttributeError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("stats file {path}: {message}")]
    StatsFile { path: String, message: String },
}

/// Standard normal CDF.
pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

fn check_sigma(sigma: f64) -> Result<(), FilterError> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(FilterError::NonPositiveSigma(sigma))
    }
}

/// Score for attributes where lower values mean simpler output.
pub fn score_lower_better(phi: f64, mu: f64, sigma: f64) -> Result<f64, FilterError> {
    check_sigma(sigma)?;
    if phi <= mu {
        return Ok(1.0);
    }
    Ok((2.0 * (1.0 - std_normal_cdf((phi - mu) / sigma))).clamp(0.0, 1.0))
}

/// Score for attributes where higher values mean simpler output.
pub fn score_higher_better(phi: f64, mu: f64, sigma: f64) -> Result<f64, FilterError> {
    check_sigma(sigma)?;
    if phi >= mu {
        return Ok(1.0);
    }
    Ok((2.0 * std_normal_cdf((phi - mu) / sigma)).clamp(0.0, 1.0))
}

pub fn score_attribute(
    attr: Attribute,
    phi: f64,
    stats: &AttributeStats,
) -> Result<f64, FilterError> {
    if attr.higher_is_simpler() {
        score_higher_better(phi, stats.mu, stats.sigma)
    } else {
        score_lower_better(phi, stats.mu, stats.sigma)
    }
}

/// Plain weighted sum `Σ α_i t_i`.
pub fn combine(t: &[f64], alphas: &[f64]) -> f64 {
    t.iter().zip(alphas).map(|(t, a)| t * a).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttributeStats {
    pub mu: f64,
    pub sigma: f64,
    pub n: usize,
}

/// Per-attribute mean and sample standard deviation of a reference corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceStats {
    #[serde(flatten)]
    pub attrs: BTreeMap<Attribute, AttributeStats>,
    pub reference: String,
}

impl ReferenceStats {
    pub fn get(&self, a: Attribute) -> Result<&AttributeStats, FilterError> {
        self.attrs.get(&a).ok_or(FilterError::MissingStats(a))
    }

    pub fn save(&self, path: &Path) -> Result<(), FilterError> {
        let err = |message: String| FilterError::StatsFile {
            path: path.display().to_string(),
            message,
        };
        let json = serde_json::to_string_pretty(self).map_err(|e| err(e.to_string()))?;
        std::fs::write(path, json + "\n").map_err(|e| err(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, FilterError> {
        let err = |message: String| FilterError::StatsFile {
            path: path.display().to_string(),
            message,
        };
        let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        let stats: Self = serde_json::from_str(&text).map_err(|e| err(e.to_string()))?;
        for (a, s) in &stats.attrs {
            if !(s.sigma > 0.0 && s.sigma.is_finite() && s.mu.is_finite()) {
                return Err(err(format!(
                    "attribute {a}: mu {} sigma {} is unusable",
                    s.mu, s.sigma
                )));
            }
        }
        Ok(stats)
    }
}

/// Running mean and variance (Welford).
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn sample_sd(&self) -> f64 {
        (self.m2 / (self.n - 1) as f64).sqrt()
    }
}

/// Mean and sample standard deviation of `values`, rejecting fewer than two
/// values or zero spread.
pub fn fit_values(
    attr: Attribute,
    values: impl IntoIterator<Item = f64>,
) -> Result<AttributeStats, FilterError> {
    let mut m = Moments::default();
    values.into_iter().for_each(|v| m.push(v));
    if m.n < 2 {
        return Err(FilterError::EmptyCorpus(m.n));
    }
    let sigma = m.sample_sd();
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(FilterError::DegenerateAttribute(attr));
    }
    Ok(AttributeStats {
        mu: m.mean,
        sigma,
        n: m.n,
    })
}

/// Fits statistics for `active` attributes over a reference corpus, each
/// pair taken as single-source. SARI references are only looked up when
/// `sari` is active.
pub fn fit_reference_stats<I>(
    pairs: I,
    res: &AttributeResources,
    active: &BTreeSet<Attribute>,
    reference: impl Into<String>,
) -> Result<ReferenceStats, FilterError>
where
    I: IntoIterator<Item = Result<ParallelPair, CorpusError>>,
{
    use crate::attributes::{attr_complexity, attr_frequency, attr_length, attr_sari};
    let mut moments: BTreeMap<Attribute, Moments> =
        active.iter().map(|&a| (a, Moments::default())).collect();
    for pair in pairs {
        let pair = pair?;
        for (&a, m) in moments.iter_mut() {
            let v = match a {
                Attribute::Len => attr_length(&pair),
                Attribute::Comp => attr_complexity(&pair, &res.lexicon),
                Attribute::Freq => attr_frequency(&pair, &res.odds),
                Attribute::Sari => {
                    let refs = res.references.refs_for(&pair.pair_id(), pair.target())?;
                    attr_sari(&pair, &refs)?.sari
                }
            };
            m.push(v);
        }
    }
    let mut attrs = BTreeMap::new();
    for (a, m) in moments {
        if m.n < 2 {
            return Err(FilterError::EmptyCorpus(m.n));
        }
        let sigma = m.sample_sd();
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(FilterError::DegenerateAttribute(a));
        }
        attrs.insert(
            a,
            AttributeStats {
                mu: m.mean,
                sigma,
                n: m.n,
            },
        );
    }
    Ok(ReferenceStats {
        attrs,
        reference: reference.into(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterConfig {
    /// Relative weights; rescaled to sum to the number of active attributes.
    pub alphas: BTreeMap<Attribute, f64>,
    pub t_s: f64,
    pub disabled: BTreeSet<Attribute>,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            alphas: Attribute::ALL.iter().map(|&a| (a, 0.25)).collect(),
            t_s: 3.75,
            disabled: BTreeSet::new(),
        }
    }
}

impl FilterConfig {
    pub fn active(&self) -> BTreeSet<Attribute> {
        Attribute::ALL
            .into_iter()
            .filter(|a| !self.disabled.contains(a))
            .collect()
    }

    pub fn validate(&self) -> Result<(), FilterError> {
        if !self.t_s.is_finite() {
            return Err(FilterError::Config(format!(
                "t_s must be finite, got {}",
                self.t_s
            )));
        }
        if let Some((a, v)) = self
            .alphas
            .iter()
            .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
        {
            return Err(FilterError::Config(format!(
                "alpha for {a} must be non-negative, got {v}"
            )));
        }
        let active = self.active();
        if active.is_empty() {
            return Err(FilterError::Config("every attribute is disabled".into()));
        }
        if active.iter().map(|a| self.alpha(*a)).sum::<f64>() <= 0.0 {
            return Err(FilterError::Config("active alphas sum to zero".into()));
        }
        Ok(())
    }

    fn alpha(&self, a: Attribute) -> f64 {
        self.alphas.get(&a).copied().unwrap_or(0.25)
    }

    /// Effective weights over the active attributes, summing to their count.
    pub fn weights(&self) -> BTreeMap<Attribute, f64> {
        let active = self.active();
        let total: f64 = active.iter().map(|a| self.alpha(*a)).sum();
        let k = active.len() as f64;
        active
            .into_iter()
            .map(|a| (a, self.alpha(a) * k / total))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairScores {
    pub t_scores: BTreeMap<Attribute, f64>,
    pub total_t: f64,
    pub accepted: bool,
}

pub fn score_pair(
    attrs: &AttributeVector,
    stats: &ReferenceStats,
    cfg: &FilterConfig,
) -> Result<PairScores, FilterError> {
    let mut t_scores = BTreeMap::new();
    let mut total_t = 0.0;
    for (a, w) in cfg.weights() {
        let t = score_attribute(a, attrs.get(a), stats.get(a)?)?;
        total_t += w * t;
        t_scores.insert(a, t);
    }
    Ok(PairScores {
        t_scores,
        accepted: total_t > cfg.t_s,
        total_t,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredPair {
    pub pair: AlignedPair,
    pub attrs: AttributeVector,
    pub scores: PairScores,
}

impl ScoredPair {
    pub fn to_record(&self) -> ScoredPairRecord {
        ScoredPairRecord {
            aligned: self.pair.to_record(),
            attrs: self.attrs,
            t_scores: self.scores.t_scores.clone(),
            total_t: self.scores.total_t,
            accepted: self.scores.accepted,
        }
    }
}

/// One line of the scored-pairs JSON Lines file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredPairRecord {
    #[serde(flatten)]
    pub aligned: AlignedPairRecord,
    pub attrs: AttributeVector,
    pub t_scores: BTreeMap<Attribute, f64>,
    #[serde(rename = "T")]
    pub total_t: f64,
    pub accepted: bool,
}

pub const T_BINS: usize = 10;

/// Accept/reject counts plus histograms of per-attribute t and of T.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FilterReport {
    pub seen: usize,
    pub accepted: usize,
    pub rejected: usize,
    pub t_s: f64,
    /// Ten bins of width 0.1 over [0, 1].
    pub t_histograms: BTreeMap<Attribute, Vec<usize>>,
    /// Bins of width 0.25 over [0, number of active attributes].
    pub total_histogram: Vec<usize>,
}

impl FilterReport {
    pub fn new(cfg: &FilterConfig) -> Self {
        let k = cfg.active().len();
        Self {
            t_s: cfg.t_s,
            t_histograms: cfg
                .active()
                .into_iter()
                .map(|a| (a, vec![0; T_BINS]))
                .collect(),
            total_histogram: vec![0; 4 * k],
            ..Self::default()
        }
    }

    pub fn record(&mut self, scores: &PairScores) {
        self.seen += 1;
        if scores.accepted {
            self.accepted += 1;
        } else {
            self.rejected += 1;
        }
        for (a, t) in &scores.t_scores {
            if let Some(h) = self.t_histograms.get_mut(a) {
                let bin = ((t * T_BINS as f64) as usize).min(T_BINS - 1);
                h[bin] += 1;
            }
        }
        if !self.total_histogram.is_empty() {
            let last = self.total_histogram.len() - 1;
            let bin = ((scores.total_t.max(0.0) * 4.0) as usize).min(last);
            self.total_histogram[bin] += 1;
        }
    }

    pub fn merge(&mut self, other: &FilterReport) {
        self.seen += other.seen;
        self.accepted += other.accepted;
        self.rejected += other.rejected;
        for (a, h) in &other.t_histograms {
            let mine = self
                .t_histograms
                .entry(*a)
                .or_insert_with(|| vec![0; h.len()]);
            mine.iter_mut().zip(h).for_each(|(m, o)| *m += o);
        }
        if self.total_histogram.len() < other.total_histogram.len() {
            self.total_histogram.resize(other.total_histogram.len(), 0);
        }
        self.total_histogram
            .iter_mut()
            .zip(&other.total_histogram)
            .for_each(|(m, o)| *m += o);
    }
}

/// Rejected pair id and its T.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    pub pair_id: String,
    #[serde(rename = "T")]
    pub total_t: f64,
}

pub struct FilterOutcome {
    pub accepted: Vec<ScoredPair>,
    pub rejections: Vec<Rejection>,
    pub report: FilterReport,
}

/// Scores every pair and splits them by the threshold.
pub fn filter_stream<I>(
    pairs: I,
    stats: &ReferenceStats,
    cfg: &FilterConfig,
) -> Result<FilterOutcome, FilterError>
where
    I: IntoIterator<Item = (AlignedPair, AttributeVector)>,
{
    cfg.validate()?;
    let mut out = FilterOutcome {
        accepted: Vec::new(),
        rejections: Vec::new(),
        report: FilterReport::new(cfg),
    };
    for (pair, attrs) in pairs {
        let scores = score_pair(&attrs, stats, cfg)?;
        out.report.record(&scores);
        if scores.accepted {
            out.accepted.push(ScoredPair {
                pair,
                attrs,
                scores,
            });
        } else {
            out.rejections.push(Rejection {
                pair_id: pair.pair_id(),
                total_t: scores.total_t,
            });
        }
    }
    Ok(out)
}
