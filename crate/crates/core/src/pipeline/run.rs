use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Needs, PipelineConfig, ProviderKind};
use super::PipelineError;
use crate::aligner::{
    align_document, AlignedPair, AlignedPairRecord, DocumentAlignment, EmbeddingScorer,
    SimilarityScorer,
};
use crate::attributes::{
    build_odds_dict, sari, Attribute, AttributeResources, ComplexityLexicon, OddsRatioDict,
    ReferenceSource, SariScore,
};
use crate::corpus::{
    load_document_corpus, load_pair_jsonl, DocumentReader, DocumentRecord, SentenceRecord,
};
use crate::embedding::{
    CachedProvider, EmbeddingError, MockProvider, PrecomputedProvider, RemoteProvider,
};
use crate::filterer::{
    fit_reference_stats, score_pair, FilterConfig, FilterReport, ReferenceStats, ScoredPair,
};
use crate::stats::{dataset_stats, StatsReport, WordLists};

pub const ALIGNED_FILE: &str = "aligned.jsonl";
pub const SCORED_FILE: &str = "scored.jsonl";
pub const S4S_FILE: &str = "s4s.jsonl";
pub const SKIPPED_FILE: &str = "skipped.jsonl";
pub const STATS_FILE: &str = "reference_stats.json";
pub const ODDS_FILE: &str = "odds.tsv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const REPORT_JSON: &str = "stats.json";
pub const REPORT_TABLE: &str = "stats.txt";

/// Embedding-backed scorer for the configured provider. Remote providers
/// are health-checked here and memoized per run.
pub fn build_scorer(cfg: &PipelineConfig) -> Result<Box<dyn SimilarityScorer>, PipelineError> {
    let p = &cfg.provider;
    Ok(match p.kind {
        ProviderKind::Mock => Box::new(EmbeddingScorer::new(MockProvider)),
        ProviderKind::Precomputed => {
            let path = p.path.as_ref().ok_or_else(|| {
                PipelineError::Config("missing required setting: provider.path".into())
            })?;
            Box::new(EmbeddingScorer::new(PrecomputedProvider::load(path)?))
        }
        ProviderKind::Remote => {
            let url = p.url.as_ref().ok_or_else(|| {
                PipelineError::Config("missing required setting: provider.url".into())
            })?;
            let remote = RemoteProvider::connect(url, p.remote_options())?;
            Box::new(EmbeddingScorer::new(CachedProvider::with_capacity(
                remote,
                p.cache_capacity,
            )))
        }
    })
}

/// Per-pair counts at every stage. `summary_sentences` splits into
/// aligned, unaligned and alignment-skipped; `aligned` into scored and
/// score-skipped; `scored` into accepted and rejected.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageCounts {
    pub documents: usize,
    pub documents_skipped: usize,
    pub summary_sentences: usize,
    pub aligned: usize,
    pub aligned_single_source: usize,
    pub aligned_multi_source: usize,
    pub unaligned: usize,
    pub alignment_skipped: usize,
    pub scored: usize,
    pub score_skipped: usize,
    pub accepted: usize,
    pub rejected: usize,
}

impl StageCounts {
    pub fn reconciles(&self) -> bool {
        self.summary_sentences == self.aligned + self.unaligned + self.alignment_skipped
            && self.aligned == self.aligned_single_source + self.aligned_multi_source
            && self.scored + self.score_skipped <= self.aligned
            && self.scored == self.accepted + self.rejected
    }

    fn add_alignment(&mut self, a: &DocumentAlignment, summary_sentences: usize) {
        self.documents += 1;
        self.summary_sentences += summary_sentences;
        self.aligned += a.pairs.len();
        self.aligned_single_source += a.pairs.iter().filter(|p| p.sources.len() == 1).count();
        self.aligned_multi_source += a.pairs.iter().filter(|p| p.sources.len() > 1).count();
        self.unaligned += a.unaligned;
        self.alignment_skipped += a.skipped.len();
    }
}

/// A pair dropped before scoring completed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkipRecord {
    pub pair_id: String,
    pub stage: String,
    pub reason: String,
}

/// One accepted pair of the mined dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct S4sRecord {
    pub id: String,
    pub source: String,
    pub target: String,
    #[serde(rename = "T")]
    pub total_t: f64,
}

impl S4sRecord {
    fn from_scored(s: &ScoredPair) -> Self {
        Self {
            id: s.pair.pair_id(),
            source: s.pair.stitched_source(),
            target: s.pair.target.raw().to_string(),
            total_t: s.scores.total_t,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    /// Effective configuration, defaults included.
    pub config: PipelineConfig,
    pub provider_model: Option<String>,
    pub refs_mode: Option<String>,
    pub reference_refs_mode: Option<String>,
    pub sari_auto_disabled: bool,
    pub active_attributes: Vec<Attribute>,
    pub t_s: f64,
    pub t_s_effective: f64,
    pub counts: StageCounts,
    pub corpus_skips: BTreeMap<String, usize>,
    pub reference_stats: Option<ReferenceStats>,
    pub filter_report: Option<FilterReport>,
    pub outputs: Vec<String>,
}

impl Manifest {
    fn new(command: &str, cfg: &PipelineConfig) -> Self {
        Self {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config: cfg.clone(),
            provider_model: None,
            refs_mode: None,
            reference_refs_mode: None,
            sari_auto_disabled: false,
            active_attributes: cfg.filter.active().into_iter().collect(),
            t_s: cfg.filter.t_s,
            t_s_effective: cfg.filter.t_s,
            counts: StageCounts::default(),
            corpus_skips: BTreeMap::new(),
            reference_stats: None,
            filter_report: None,
            outputs: Vec::new(),
        }
    }

    fn apply_plan(&mut self, plan: &FilterPlan) {
        self.sari_auto_disabled = plan.sari_auto_disabled;
        self.active_attributes = plan.cfg.active().into_iter().collect();
        self.t_s_effective = plan.cfg.t_s;
    }

    fn write(&self, dir: &Path) -> Result<PathBuf, PipelineError> {
        let path = dir.join(MANIFEST_FILE);
        let json = serde_json::to_string_pretty(self).map_err(|e| PipelineError::io(&path, e))?;
        std::fs::write(&path, json + "\n").map_err(|e| PipelineError::io(&path, e))?;
        Ok(path)
    }
}

struct JsonlWriter {
    out: BufWriter<File>,
    path: PathBuf,
}

impl JsonlWriter {
    fn create(dir: &Path, name: &str) -> Result<Self, PipelineError> {
        let path = dir.join(name);
        let file = File::create(&path).map_err(|e| PipelineError::io(&path, e))?;
        Ok(Self {
            out: BufWriter::new(file),
            path,
        })
    }

    fn write<T: Serialize>(&mut self, value: &T) -> Result<(), PipelineError> {
        serde_json::to_writer(&mut self.out, value)
            .map_err(|e| PipelineError::io(&self.path, e))?;
        self.out
            .write_all(b"\n")
            .map_err(|e| PipelineError::io(&self.path, e))
    }

    fn finish(mut self) -> Result<(), PipelineError> {
        self.out
            .flush()
            .map_err(|e| PipelineError::io(&self.path, e))
    }
}

fn output_dir(cfg: &PipelineConfig) -> Result<&Path, PipelineError> {
    let dir = cfg.paths.output_dir.as_path();
    std::fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
    Ok(dir)
}

fn pool(cfg: &PipelineConfig) -> Result<rayon::ThreadPool, PipelineError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| PipelineError::Config(format!("worker pool: {e}")))
}

/// Feeds documents to the pool a chunk at a time and hands results to
/// `sink` in input order.
fn for_each_document<T, F, S>(
    cfg: &PipelineConfig,
    reader: &mut DocumentReader,
    work: F,
    mut sink: S,
) -> Result<(), PipelineError>
where
    T: Send,
    F: Fn(&DocumentRecord) -> T + Sync,
    S: FnMut(&DocumentRecord, T) -> Result<(), PipelineError>,
{
    let pool = pool(cfg)?;
    let mut done = 0usize;
    loop {
        let mut chunk = Vec::with_capacity(cfg.chunk_size);
        for doc in reader.by_ref().take(cfg.chunk_size) {
            chunk.push(doc?);
        }
        if chunk.is_empty() {
            break;
        }
        let results: Vec<T> = pool.install(|| chunk.par_iter().map(&work).collect());
        for (doc, r) in chunk.iter().zip(results) {
            sink(doc, r)?;
        }
        let before = done;
        done += chunk.len();
        if done / 1000 != before / 1000 {
            log::info!("{done} documents processed");
        }
    }
    Ok(())
}

/// Provider outages abort the run; other per-sentence failures are skips.
fn check_outage(a: &DocumentAlignment) -> Result<(), PipelineError> {
    match a
        .skipped
        .iter()
        .find(|s| matches!(s.cause, EmbeddingError::ProviderUnavailable(_)))
    {
        Some(s) => Err(PipelineError::Provider(s.cause.clone())),
        None => Ok(()),
    }
}

fn write_alignment(
    a: &DocumentAlignment,
    aligned: &mut JsonlWriter,
    skipped: &mut JsonlWriter,
) -> Result<(), PipelineError> {
    for p in &a.pairs {
        aligned.write(&p.to_record())?;
    }
    for s in &a.skipped {
        skipped.write(&SkipRecord {
            pair_id: s.pair_id.clone(),
            stage: "align".into(),
            reason: s.cause.to_string(),
        })?;
    }
    Ok(())
}

pub struct AlignOutcome {
    pub counts: StageCounts,
    pub manifest: PathBuf,
}

/// Aligns every summary sentence of the corpus and writes `aligned.jsonl`.
pub fn run_align(
    cfg: &PipelineConfig,
    scorer: &dyn SimilarityScorer,
) -> Result<AlignOutcome, PipelineError> {
    cfg.validate(Needs {
        corpus: true,
        ..Needs::default()
    })?;
    let dir = output_dir(cfg)?;
    let corpus = cfg.paths.corpus.as_ref().expect("validated");
    let mut reader = load_document_corpus(corpus)?;
    let mut aligned = JsonlWriter::create(dir, ALIGNED_FILE)?;
    let mut skipped = JsonlWriter::create(dir, SKIPPED_FILE)?;
    let mut counts = StageCounts::default();

    for_each_document(
        cfg,
        &mut reader,
        |doc| align_document(doc, &cfg.alignment, scorer),
        |doc, a| {
            check_outage(&a)?;
            counts.add_alignment(&a, doc.summary_sentences.len());
            write_alignment(&a, &mut aligned, &mut skipped)
        },
    )?;
    aligned.finish()?;
    skipped.finish()?;
    counts.documents_skipped = reader.tally().skipped_total();
    log_counts(&counts);

    let mut manifest = Manifest::new("align", cfg);
    manifest.provider_model = Some(scorer.model_id());
    manifest.counts = counts.clone();
    manifest.corpus_skips = reader.tally().skipped.clone();
    manifest.outputs = vec![ALIGNED_FILE.into(), SKIPPED_FILE.into()];
    let manifest = manifest.write(dir)?;
    Ok(AlignOutcome { counts, manifest })
}

/// Lexicon, odds dictionary and references shared by the scoring commands.
pub struct Resources {
    pub attrs: AttributeResources,
    pub reference_refs: ReferenceSource,
    /// Built in this run rather than loaded.
    pub odds_built: bool,
}

fn reference_source(path: Option<&PathBuf>) -> Result<ReferenceSource, PipelineError> {
    Ok(match path {
        Some(p) => ReferenceSource::load(p)?,
        None => ReferenceSource::Identity,
    })
}

pub fn load_resources(cfg: &PipelineConfig) -> Result<Resources, PipelineError> {
    let lexicon_path = cfg
        .paths
        .lexicon
        .as_ref()
        .ok_or_else(|| PipelineError::Config("missing required path: paths.lexicon".into()))?;
    let lexicon = ComplexityLexicon::load(lexicon_path)?;
    log::info!("lexicon: {} entries", lexicon.len());
    let (odds, odds_built) = match &cfg.paths.odds {
        Some(p) => (OddsRatioDict::load(p)?, false),
        None => {
            let mut reader = cfg.reference.open()?;
            let mut pairs = Vec::new();
            for p in reader.by_ref() {
                pairs.push(p?);
            }
            (build_odds_dict(pairs, cfg.odds_floor)?, true)
        }
    };
    log::info!(
        "odds dictionary: {} words (n_i={}, n_j={})",
        odds.len(),
        odds.n_i(),
        odds.n_j()
    );
    Ok(Resources {
        attrs: AttributeResources {
            lexicon,
            odds,
            references: reference_source(cfg.paths.refs.as_ref())?,
        },
        reference_refs: reference_source(cfg.reference.refs.as_ref())?,
        odds_built,
    })
}

struct FilterPlan {
    cfg: FilterConfig,
    sari_auto_disabled: bool,
}

/// With identity references SARI is constant, so an active `sari` is
/// dropped and the threshold lowered by the one point it would contribute.
fn plan_filter(filter: &FilterConfig, identity_refs: bool) -> FilterPlan {
    let mut filter = filter.clone();
    let sari_auto_disabled = identity_refs && filter.active().contains(&Attribute::Sari);
    if sari_auto_disabled {
        log::warn!("identity references make sari constant; disabling it and lowering t_s by 1");
        filter.disabled.insert(Attribute::Sari);
        filter.t_s -= 1.0;
    }
    FilterPlan {
        cfg: filter,
        sari_auto_disabled,
    }
}

/// Loads `stats_file` or fits on the reference corpus with the reference
/// corpus's own references.
fn reference_stats(
    cfg: &PipelineConfig,
    stats_file: Option<&Path>,
    res: &Resources,
    plan: &FilterPlan,
) -> Result<ReferenceStats, PipelineError> {
    let active = plan.cfg.active();
    let stats = match stats_file {
        Some(p) => ReferenceStats::load(p)?,
        None => {
            let attrs = AttributeResources {
                references: res.reference_refs.clone(),
                ..res.attrs.clone()
            };
            fit_reference_stats(
                cfg.reference.open()?,
                &attrs,
                &active,
                cfg.reference.name.clone(),
            )?
        }
    };
    for a in active {
        let s = stats.get(a)?;
        log::info!("{a}: mu={:.4} sigma={:.4} n={}", s.mu, s.sigma, s.n);
    }
    Ok(stats)
}

/// Identity references anywhere SARI is computed make it constant.
fn identity_refs(cfg: &PipelineConfig, res: &Resources) -> bool {
    res.attrs.references.is_identity()
        || (cfg.paths.stats.is_none() && res.reference_refs.is_identity())
}

fn refs_mode(r: &ReferenceSource) -> String {
    if r.is_identity() {
        "identity"
    } else {
        "external"
    }
    .into()
}

pub struct FitOutcome {
    pub stats: ReferenceStats,
    pub stats_path: PathBuf,
    pub manifest: PathBuf,
}

/// Fits reference statistics and writes `reference_stats.json` (and the odds
/// dictionary when it was built here).
pub fn run_fit_reference(cfg: &PipelineConfig) -> Result<FitOutcome, PipelineError> {
    cfg.validate(Needs {
        lexicon: true,
        reference: true,
        ..Needs::default()
    })?;
    let dir = output_dir(cfg)?;
    let res = load_resources(cfg)?;
    let plan = plan_filter(&cfg.filter, res.reference_refs.is_identity());
    let stats = reference_stats(cfg, None, &res, &plan)?;
    let stats_path = dir.join(STATS_FILE);
    stats.save(&stats_path)?;
    let mut outputs = vec![STATS_FILE.to_string()];
    if res.odds_built {
        res.attrs.odds.save(&dir.join(ODDS_FILE))?;
        outputs.push(ODDS_FILE.into());
    }
    let mut manifest = Manifest::new("fit-reference", cfg);
    manifest.apply_plan(&plan);
    manifest.reference_refs_mode = Some(refs_mode(&res.reference_refs));
    manifest.reference_stats = Some(stats.clone());
    manifest.outputs = outputs;
    let manifest = manifest.write(dir)?;
    Ok(FitOutcome {
        stats,
        stats_path,
        manifest,
    })
}

type Scored = Result<ScoredPair, SkipRecord>;

fn score_one(
    pair: AlignedPair,
    res: &AttributeResources,
    stats: &ReferenceStats,
    filter: &FilterConfig,
) -> Scored {
    let skip = |pair: &AlignedPair, reason: String| SkipRecord {
        pair_id: pair.pair_id(),
        stage: "score".into(),
        reason,
    };
    let attrs = match res.compute(&pair) {
        Ok(a) => a,
        Err(e) => return Err(skip(&pair, e.to_string())),
    };
    match score_pair(&attrs, stats, filter) {
        Ok(scores) => Ok(ScoredPair {
            pair,
            attrs,
            scores,
        }),
        Err(e) => Err(skip(&pair, e.to_string())),
    }
}

struct ScoreWriters {
    scored: JsonlWriter,
    s4s: JsonlWriter,
    skipped: JsonlWriter,
}

impl ScoreWriters {
    fn write(
        &mut self,
        s: Scored,
        counts: &mut StageCounts,
        report: &mut FilterReport,
    ) -> Result<(), PipelineError> {
        match s {
            Ok(sp) => {
                counts.scored += 1;
                report.record(&sp.scores);
                self.scored.write(&sp.to_record())?;
                if sp.scores.accepted {
                    counts.accepted += 1;
                    self.s4s.write(&S4sRecord::from_scored(&sp))?;
                } else {
                    counts.rejected += 1;
                }
            }
            Err(skip) => {
                counts.score_skipped += 1;
                self.skipped.write(&skip)?;
            }
        }
        Ok(())
    }

    fn finish(self) -> Result<(), PipelineError> {
        self.scored.finish()?;
        self.s4s.finish()?;
        self.skipped.finish()
    }
}

pub struct MineOutcome {
    pub counts: StageCounts,
    pub stats: ReferenceStats,
    pub report: FilterReport,
    pub s4s: PathBuf,
    pub manifest: PathBuf,
}

fn log_counts(c: &StageCounts) {
    log::info!(
        "documents {} (skipped {}), summary sentences {}, aligned {} (multi-source {}), unaligned {}, alignment skipped {}",
        c.documents,
        c.documents_skipped,
        c.summary_sentences,
        c.aligned,
        c.aligned_multi_source,
        c.unaligned,
        c.alignment_skipped
    );
    if c.scored + c.score_skipped > 0 {
        log::info!(
            "scored {}, score skipped {}, accepted {}, rejected {}",
            c.scored,
            c.score_skipped,
            c.accepted,
            c.rejected
        );
    }
}

/// Full chain: align, characterize, fit (unless stats are given), score and
/// filter. Writes the aligned, scored and accepted pairs plus a manifest.
pub fn run_mine(
    cfg: &PipelineConfig,
    scorer: &dyn SimilarityScorer,
) -> Result<MineOutcome, PipelineError> {
    cfg.validate(Needs {
        corpus: true,
        lexicon: true,
        odds: true,
        stats: true,
        ..Needs::default()
    })?;
    let dir = output_dir(cfg)?;
    let res = load_resources(cfg)?;
    let plan = plan_filter(&cfg.filter, identity_refs(cfg, &res));
    let stats = reference_stats(cfg, cfg.paths.stats.as_deref(), &res, &plan)?;

    let mut reader = load_document_corpus(cfg.paths.corpus.as_ref().expect("validated"))?;
    let mut aligned = JsonlWriter::create(dir, ALIGNED_FILE)?;
    let mut writers = ScoreWriters {
        scored: JsonlWriter::create(dir, SCORED_FILE)?,
        s4s: JsonlWriter::create(dir, S4S_FILE)?,
        skipped: JsonlWriter::create(dir, SKIPPED_FILE)?,
    };
    let mut counts = StageCounts::default();
    let mut report = FilterReport::new(&plan.cfg);

    for_each_document(
        cfg,
        &mut reader,
        |doc| {
            let a = align_document(doc, &cfg.alignment, scorer);
            let scored: Vec<Scored> = a
                .pairs
                .iter()
                .map(|p| score_one(p.clone(), &res.attrs, &stats, &plan.cfg))
                .collect();
            (a, scored)
        },
        |doc, (a, scored)| {
            check_outage(&a)?;
            counts.add_alignment(&a, doc.summary_sentences.len());
            write_alignment(&a, &mut aligned, &mut writers.skipped)?;
            for s in scored {
                writers.write(s, &mut counts, &mut report)?;
            }
            Ok(())
        },
    )?;
    aligned.finish()?;
    writers.finish()?;
    counts.documents_skipped = reader.tally().skipped_total();
    log_counts(&counts);

    let mut manifest = Manifest::new("mine", cfg);
    manifest.apply_plan(&plan);
    manifest.provider_model = Some(scorer.model_id());
    manifest.refs_mode = Some(refs_mode(&res.attrs.references));
    if cfg.paths.stats.is_none() {
        manifest.reference_refs_mode = Some(refs_mode(&res.reference_refs));
    }
    manifest.counts = counts.clone();
    manifest.corpus_skips = reader.tally().skipped.clone();
    manifest.reference_stats = Some(stats.clone());
    manifest.filter_report = Some(report.clone());
    manifest.outputs = [ALIGNED_FILE, SCORED_FILE, S4S_FILE, SKIPPED_FILE]
        .map(String::from)
        .to_vec();
    let manifest = manifest.write(dir)?;
    Ok(MineOutcome {
        counts,
        stats,
        report,
        s4s: dir.join(S4S_FILE),
        manifest,
    })
}

/// Characterizes, scores and filters an existing `aligned.jsonl`.
pub fn run_score(cfg: &PipelineConfig, aligned_path: &Path) -> Result<MineOutcome, PipelineError> {
    cfg.validate(Needs {
        lexicon: true,
        odds: true,
        stats: true,
        ..Needs::default()
    })?;
    if !aligned_path.exists() {
        return Err(PipelineError::Config(format!(
            "path does not exist: {}",
            aligned_path.display()
        )));
    }
    let dir = output_dir(cfg)?;
    let res = load_resources(cfg)?;
    let plan = plan_filter(&cfg.filter, identity_refs(cfg, &res));
    let stats = reference_stats(cfg, cfg.paths.stats.as_deref(), &res, &plan)?;
    let pool = pool(cfg)?;

    let file = File::open(aligned_path).map_err(|e| PipelineError::io(aligned_path, e))?;
    let mut lines = BufReader::new(file).lines().enumerate();
    let mut writers = ScoreWriters {
        scored: JsonlWriter::create(dir, SCORED_FILE)?,
        s4s: JsonlWriter::create(dir, S4S_FILE)?,
        skipped: JsonlWriter::create(dir, SKIPPED_FILE)?,
    };
    let mut counts = StageCounts::default();
    let mut report = FilterReport::new(&plan.cfg);
    loop {
        let mut chunk = Vec::with_capacity(cfg.chunk_size);
        for (i, line) in lines.by_ref() {
            let line = line.map_err(|e| PipelineError::io(aligned_path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: AlignedPairRecord = serde_json::from_str(&line).map_err(|e| {
                PipelineError::Data(format!("{}:{}: {e}", aligned_path.display(), i + 1))
            })?;
            chunk.push(rec.into_pair());
            if chunk.len() == cfg.chunk_size {
                break;
            }
        }
        if chunk.is_empty() {
            break;
        }
        counts.aligned += chunk.len();
        for p in &chunk {
            if p.sources.len() == 1 {
                counts.aligned_single_source += 1;
            } else {
                counts.aligned_multi_source += 1;
            }
        }
        let scored: Vec<Scored> = pool.install(|| {
            chunk
                .into_par_iter()
                .map(|p| score_one(p, &res.attrs, &stats, &plan.cfg))
                .collect()
        });
        for s in scored {
            writers.write(s, &mut counts, &mut report)?;
        }
    }
    writers.finish()?;
    counts.summary_sentences = counts.aligned;
    log_counts(&counts);

    let mut manifest = Manifest::new("score", cfg);
    manifest.apply_plan(&plan);
    manifest.refs_mode = Some(refs_mode(&res.attrs.references));
    manifest.counts = counts.clone();
    manifest.reference_stats = Some(stats.clone());
    manifest.filter_report = Some(report.clone());
    manifest.outputs = [SCORED_FILE, S4S_FILE, SKIPPED_FILE]
        .map(String::from)
        .to_vec();
    let manifest = manifest.write(dir)?;
    Ok(MineOutcome {
        counts,
        stats,
        report,
        s4s: dir.join(S4S_FILE),
        manifest,
    })
}

#[derive(Debug, Clone, Default)]
pub struct StatsOptions {
    /// Pairs as JSON Lines `{"id"?, "source", "target"}`.
    pub dataset: PathBuf,
    pub dataset_name: String,
    pub reference: Option<PathBuf>,
    pub reference_name: String,
    pub lexicon: Option<PathBuf>,
    pub words: WordLists,
    /// Run manifest whose stage counts are copied into the report.
    pub manifest: Option<PathBuf>,
    pub output_dir: PathBuf,
}

fn read_pairs(path: &Path) -> Result<Vec<crate::corpus::ParallelPair>, PipelineError> {
    let mut reader = load_pair_jsonl(path)?;
    let mut pairs = Vec::new();
    for p in reader.by_ref() {
        pairs.push(p?);
    }
    if reader.tally().skipped_total() > 0 {
        log::warn!(
            "{}: skipped {} malformed pairs",
            path.display(),
            reader.tally().skipped_total()
        );
    }
    Ok(pairs)
}

/// Length-ratio and complexity-delta histograms plus cue-word and
/// conjunction odds ratios; writes `stats.json` and `stats.txt`.
pub fn run_stats(opts: &StatsOptions) -> Result<StatsReport, PipelineError> {
    for p in [
        Some(&opts.dataset),
        opts.reference.as_ref(),
        opts.lexicon.as_ref(),
        opts.manifest.as_ref(),
    ]
    .into_iter()
    .flatten()
    {
        if !p.exists() {
            return Err(PipelineError::Config(format!(
                "path does not exist: {}",
                p.display()
            )));
        }
    }
    let lexicon = opts
        .lexicon
        .as_deref()
        .map(ComplexityLexicon::load)
        .transpose()?;
    let dataset = dataset_stats(
        &opts.dataset_name,
        read_pairs(&opts.dataset)?,
        lexicon.as_ref(),
        &opts.words,
    );
    let reference = match &opts.reference {
        Some(p) => Some(dataset_stats(
            &opts.reference_name,
            read_pairs(p)?,
            lexicon.as_ref(),
            &opts.words,
        )),
        None => None,
    };
    let stage_counts = match &opts.manifest {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| PipelineError::io(p, e))?;
            let v: serde_json::Value = serde_json::from_str(&text)
                .map_err(|e| PipelineError::Data(format!("{}: {e}", p.display())))?;
            let counts: BTreeMap<String, usize> = serde_json::from_value(v["counts"].clone())
                .map_err(|e| PipelineError::Data(format!("{}: counts: {e}", p.display())))?;
            Some(counts)
        }
        None => None,
    };
    let report = StatsReport {
        dataset,
        reference,
        stage_counts,
    };
    let dir = opts.output_dir.as_path();
    std::fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
    let json_path = dir.join(REPORT_JSON);
    let json =
        serde_json::to_string_pretty(&report).map_err(|e| PipelineError::io(&json_path, e))?;
    std::fs::write(&json_path, json + "\n").map_err(|e| PipelineError::io(&json_path, e))?;
    let table_path = dir.join(REPORT_TABLE);
    std::fs::write(&table_path, report.render_table())
        .map_err(|e| PipelineError::io(&table_path, e))?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SariLine {
    pub line: usize,
    #[serde(flatten)]
    pub score: SariScore,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SariOutcome {
    pub sentences: usize,
    /// Component-wise mean over sentences.
    pub mean: SariScore,
    pub lines: Vec<SariLine>,
}

fn read_lines(path: &Path) -> Result<Vec<String>, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
    Ok(text.lines().map(str::to_string).collect())
}

/// Sentence-level SARI over line-aligned input, output and reference files,
/// one reference per line in each reference file.
pub fn run_sari(
    input: &Path,
    output: &Path,
    refs: &[PathBuf],
) -> Result<SariOutcome, PipelineError> {
    if refs.is_empty() {
        return Err(PipelineError::Config(
            "sari needs at least one reference file".into(),
        ));
    }
    for p in [input, output]
        .into_iter()
        .chain(refs.iter().map(PathBuf::as_path))
    {
        if !p.exists() {
            return Err(PipelineError::Config(format!(
                "path does not exist: {}",
                p.display()
            )));
        }
    }
    let inputs = read_lines(input)?;
    let outputs = read_lines(output)?;
    let ref_sets = refs
        .iter()
        .map(|p| read_lines(p))
        .collect::<Result<Vec<_>, _>>()?;
    for (p, n) in std::iter::once((output, outputs.len())).chain(
        refs.iter()
            .map(PathBuf::as_path)
            .zip(ref_sets.iter().map(Vec::len)),
    ) {
        if n != inputs.len() {
            return Err(PipelineError::Data(format!(
                "{}: {n} lines, expected {} to match {}",
                p.display(),
                inputs.len(),
                input.display()
            )));
        }
    }
    let mut lines = Vec::with_capacity(inputs.len());
    for (i, (src, out)) in inputs.iter().zip(&outputs).enumerate() {
        let rec = |t: &str, side: &str| SentenceRecord::new(format!("{side}:{}", i + 1), t);
        let r: Vec<SentenceRecord> = ref_sets.iter().map(|set| rec(&set[i], "ref")).collect();
        let score = sari(&rec(src, "src"), &rec(out, "out"), &r)?;
        lines.push(SariLine { line: i + 1, score });
    }
    let n = lines.len().max(1) as f64;
    let mean_of = |f: fn(&SariScore) -> f64| lines.iter().map(|l| f(&l.score)).sum::<f64>() / n;
    let mean = SariScore {
        f_add: mean_of(|s| s.f_add),
        f_keep: mean_of(|s| s.f_keep),
        p_del: mean_of(|s| s.p_del),
        sari: mean_of(|s| s.sari),
    };
    Ok(SariOutcome {
        sentences: lines.len(),
        mean,
        lines,
    })
}
