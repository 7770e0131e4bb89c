use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::aligner::AlignmentConfig;
use crate::attributes::DEFAULT_FLOOR;
use crate::corpus::{load_pair_jsonl, load_parallel_corpus, load_parallel_tsv, ParallelReader};
use crate::embedding::RemoteOptions;
use crate::filterer::FilterConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    /// Document/summary corpus, JSON Lines.
    pub corpus: Option<PathBuf>,
    /// Word complexity lexicon, `word<TAB>score`.
    pub lexicon: Option<PathBuf>,
    /// External references for mined pairs; identity references when absent.
    pub refs: Option<PathBuf>,
    /// Prebuilt odds dictionary; built from the reference corpus when absent.
    pub odds: Option<PathBuf>,
    /// Prefitted reference statistics; fitted on the reference corpus when absent.
    pub stats: Option<PathBuf>,
    pub output_dir: PathBuf,
}

impl Default for PathsConfig {
    fn default() -> Self {
        Self {
            corpus: None,
            lexicon: None,
            refs: None,
            odds: None,
            stats: None,
            output_dir: PathBuf::from("s4s-out"),
        }
    }
}

/// Reference simplification corpus: two line-aligned files, one TSV, or
/// JSON Lines pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReferenceConfig {
    pub name: String,
    pub source: Option<PathBuf>,
    pub target: Option<PathBuf>,
    pub tsv: Option<PathBuf>,
    pub jsonl: Option<PathBuf>,
    /// External references for reference pairs, keyed by 1-based line number.
    pub refs: Option<PathBuf>,
}

impl Default for ReferenceConfig {
    fn default() -> Self {
        Self {
            name: "reference".into(),
            source: None,
            target: None,
            tsv: None,
            jsonl: None,
            refs: None,
        }
    }
}

impl ReferenceConfig {
    pub fn is_set(&self) -> bool {
        self.source.is_some() || self.target.is_some() || self.tsv.is_some() || self.jsonl.is_some()
    }

    fn check(&self) -> Result<(), PipelineError> {
        let forms = [
            self.source.is_some() || self.target.is_some(),
            self.tsv.is_some(),
            self.jsonl.is_some(),
        ];
        if forms.iter().filter(|f| **f).count() > 1 {
            return Err(PipelineError::Config(
                "reference corpus: give exactly one of source+target, tsv, jsonl".into(),
            ));
        }
        if self.source.is_some() != self.target.is_some() {
            return Err(PipelineError::Config(
                "reference corpus: source and target must be given together".into(),
            ));
        }
        Ok(())
    }

    pub fn open(&self) -> Result<ParallelReader, PipelineError> {
        self.check()?;
        let reader = match (&self.source, &self.target, &self.tsv, &self.jsonl) {
            (Some(s), Some(t), _, _) => load_parallel_corpus(s, t)?,
            (_, _, Some(p), _) => load_parallel_tsv(p)?,
            (_, _, _, Some(p)) => load_pair_jsonl(p)?,
            _ => {
                return Err(PipelineError::Config(
                    "no reference corpus configured".into(),
                ))
            }
        };
        Ok(reader)
    }

    fn paths(&self) -> impl Iterator<Item = &PathBuf> {
        [
            &self.source,
            &self.target,
            &self.tsv,
            &self.jsonl,
            &self.refs,
        ]
        .into_iter()
        .flatten()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    Mock,
    Precomputed,
    Remote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProviderConfig {
    pub kind: ProviderKind,
    /// Embedding TSV for `precomputed`.
    pub path: Option<PathBuf>,
    /// Service base URL for `remote`.
    pub url: Option<String>,
    pub max_batch: usize,
    pub retries: u32,
    pub backoff_ms: u64,
    pub timeout_secs: u64,
    pub max_in_flight: usize,
    /// Embeddings memoized per run for `remote`.
    pub cache_capacity: usize,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        let r = RemoteOptions::default();
        Self {
            kind: ProviderKind::Mock,
            path: None,
            url: None,
            max_batch: r.max_batch,
            retries: r.retries,
            backoff_ms: r.backoff.as_millis() as u64,
            timeout_secs: r.timeout.as_secs(),
            max_in_flight: r.max_in_flight,
            cache_capacity: 200_000,
        }
    }
}

impl ProviderConfig {
    pub fn remote_options(&self) -> RemoteOptions {
        RemoteOptions {
            max_batch: self.max_batch,
            retries: self.retries,
            backoff: Duration::from_millis(self.backoff_ms),
            timeout: Duration::from_secs(self.timeout_secs),
            max_in_flight: self.max_in_flight,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub paths: PathsConfig,
    pub reference: ReferenceConfig,
    pub alignment: AlignmentConfig,
    pub filter: FilterConfig,
    pub provider: ProviderConfig,
    pub workers: usize,
    /// Documents handed to the worker pool at a time.
    pub chunk_size: usize,
    /// Seed for anything sampled.
    pub seed: u64,
    /// Minimum `w_i + w_j` for odds-dictionary entries.
    pub odds_floor: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            paths: PathsConfig::default(),
            reference: ReferenceConfig::default(),
            alignment: AlignmentConfig::default(),
            filter: FilterConfig::default(),
            provider: ProviderConfig::default(),
            workers: 4,
            chunk_size: 64,
            seed: 0,
            odds_floor: DEFAULT_FLOOR,
        }
    }
}

/// What a command needs from the config before it may start.
#[derive(Debug, Clone, Copy, Default)]
pub struct Needs {
    pub corpus: bool,
    pub lexicon: bool,
    /// Odds dictionary: a file or a reference corpus.
    pub odds: bool,
    /// Reference statistics: a file or a reference corpus.
    pub stats: bool,
    pub reference: bool,
    pub provider: bool,
}

impl PipelineConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, PipelineError> {
        toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
            .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Checks parameters and that every path the command will read exists.
    pub fn validate(&self, needs: Needs) -> Result<(), PipelineError> {
        let cfg = |m: String| PipelineError::Config(m);
        self.alignment.validate().map_err(|e| cfg(e.to_string()))?;
        self.filter.validate().map_err(|e| cfg(e.to_string()))?;
        self.reference.check()?;
        if self.workers == 0 {
            return Err(cfg("workers must be at least 1".into()));
        }
        if self.chunk_size == 0 {
            return Err(cfg("chunk_size must be at least 1".into()));
        }
        let require = |p: &Option<PathBuf>, what: &str| match p {
            Some(_) => Ok(()),
            None => Err(cfg(format!("missing required path: {what}"))),
        };
        if needs.corpus {
            require(&self.paths.corpus, "paths.corpus")?;
        }
        if needs.lexicon {
            require(&self.paths.lexicon, "paths.lexicon")?;
        }
        if needs.reference && !self.reference.is_set() {
            return Err(cfg(
                "missing reference corpus (reference.source/target, tsv or jsonl)".into(),
            ));
        }
        if needs.odds && self.paths.odds.is_none() && !self.reference.is_set() {
            return Err(cfg(
                "odds dictionary needs paths.odds or a reference corpus".into(),
            ));
        }
        if needs.stats && self.paths.stats.is_none() && !self.reference.is_set() {
            return Err(cfg(
                "reference statistics need paths.stats or a reference corpus".into(),
            ));
        }
        if needs.provider {
            match self.provider.kind {
                ProviderKind::Precomputed => require(&self.provider.path, "provider.path")?,
                ProviderKind::Remote => {
                    if self.provider.url.is_none() {
                        return Err(cfg("missing required setting: provider.url".into()));
                    }
                    if self.provider.max_batch == 0 || self.provider.max_in_flight == 0 {
                        return Err(cfg(
                            "provider.max_batch and provider.max_in_flight must be positive".into(),
                        ));
                    }
                }
                ProviderKind::Mock => {}
            }
        }
        let p = &self.paths;
        let mut inputs: Vec<&PathBuf> = [&p.corpus, &p.lexicon, &p.refs, &p.odds, &p.stats]
            .into_iter()
            .flatten()
            .collect();
        inputs.extend(self.reference.paths());
        if needs.provider && self.provider.kind == ProviderKind::Precomputed {
            inputs.extend(self.provider.path.as_ref());
        }
        for path in inputs {
            if !path.exists() {
                return Err(cfg(format!("path does not exist: {}", path.display())));
            }
        }
        Ok(())
    }
}
