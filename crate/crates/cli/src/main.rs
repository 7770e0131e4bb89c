//! `s4s`: mine complex-simple sentence pairs from document-summary corpora.
//!
//! Progress and warnings go to standard error; standard output carries only
//! the final status. Exit codes: 0 success, 1 config, 2 provider, 3 data.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use s4s_core::aligner::Strategy;
use s4s_core::attributes::Attribute;
use s4s_core::pipeline::synth::{write_synthetic, SynthOptions};
use s4s_core::pipeline::{
    build_scorer, run_align, run_fit_reference, run_mine, run_sari, run_score, run_stats,
    MineOutcome, PipelineConfig, PipelineError, ProviderKind, StageCounts, StatsOptions,
};
use s4s_core::stats::WordLists;

#[derive(Parser)]
#[command(
    name = "s4s",
    version,
    about = "Mine complex-simple sentence pairs from document-summary corpora"
)]
struct Cli {
    /// Only warnings and errors on standard error (RUST_LOG overrides).
    #[arg(short, long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Align summary sentences to document sentences; writes aligned.jsonl.
    Align(RunArgs),
    /// Fit per-attribute mean and deviation on the reference corpus; writes reference_stats.json.
    FitReference(RunArgs),
    /// Score and filter an existing aligned.jsonl; writes scored.jsonl and s4s.jsonl.
    Score {
        #[command(flatten)]
        run: RunArgs,
        /// Aligned pairs to score [default: <output-dir>/aligned.jsonl].
        #[arg(long)]
        aligned: Option<PathBuf>,
    },
    /// Align, characterize, fit, score and filter in one pass.
    Mine(RunArgs),
    /// Length-ratio and complexity-delta histograms plus cue-word and conjunction odds ratios.
    Stats(StatsArgs),
    /// Sentence-level SARI over line-aligned files.
    Sari(SariArgs),
    /// Write a seeded synthetic corpus, reference corpus, lexicon, references and config.
    Synth(SynthArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    /// Threshold-and-stitch alignment.
    Algorithm1,
    /// Keep every document sentence above the cutoff.
    Baseline,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProviderArg {
    Mock,
    Precomputed,
    Remote,
}

#[derive(Args)]
struct RunArgs {
    /// TOML config; flags below override it.
    #[arg(short, long)]
    config: Option<PathBuf>,

    /// Document-summary corpus, JSON Lines.
    #[arg(long, help_heading = "Paths")]
    corpus: Option<PathBuf>,
    /// Word complexity lexicon, word<TAB>score.
    #[arg(long, help_heading = "Paths")]
    lexicon: Option<PathBuf>,
    /// References for mined pairs, JSON Lines {"pair_id", "refs"}; identity when absent.
    #[arg(long, help_heading = "Paths")]
    refs: Option<PathBuf>,
    /// Prebuilt odds dictionary; built from the reference corpus when absent.
    #[arg(long, help_heading = "Paths")]
    odds: Option<PathBuf>,
    /// Prefitted reference statistics; fitted on the reference corpus when absent.
    #[arg(long, help_heading = "Paths")]
    stats: Option<PathBuf>,
    /// Directory for all outputs and the manifest
    #[arg(short, long, help_heading = "Paths")]
    output_dir: Option<PathBuf>,

    /// Reference corpus complex side, one sentence per line.
    #[arg(long, requires = "reference_target", help_heading = "Reference corpus")]
    reference_source: Option<PathBuf>,
    /// Reference corpus simple side, line-aligned with --reference-source.
    #[arg(long, requires = "reference_source", help_heading = "Reference corpus")]
    reference_target: Option<PathBuf>,
    /// Reference corpus as source<TAB>target lines.
    #[arg(long, help_heading = "Reference corpus")]
    reference_tsv: Option<PathBuf>,
    /// Reference corpus as JSON Lines {"source", "target"}.
    #[arg(long, help_heading = "Reference corpus")]
    reference_jsonl: Option<PathBuf>,
    /// References for reference pairs, keyed by 1-based line number.
    #[arg(long, help_heading = "Reference corpus")]
    reference_refs: Option<PathBuf>,

    /// S_max: a single document sentence above this is the whole source.
    #[arg(long, help_heading = "Alignment")]
    s_max: Option<f64>,
    /// S_min: below or at this the summary sentence is left unaligned.
    #[arg(long, help_heading = "Alignment")]
    s_min: Option<f64>,
    /// S_add: a stitched source is kept while its similarity stays above this.
    #[arg(long, help_heading = "Alignment")]
    s_add: Option<f64>,
    /// L_max: most document sentences in one source.
    #[arg(long, help_heading = "Alignment")]
    l_max: Option<usize>,
    #[arg(long, value_enum, help_heading = "Alignment")]
    strategy: Option<StrategyArg>,
    /// Similarity cutoff for the baseline strategy.
    #[arg(long, help_heading = "Alignment")]
    baseline_cutoff: Option<f64>,

    /// T_s: pairs with total score T above this are kept.
    #[arg(long, allow_negative_numbers = true, help_heading = "Filter")]
    t_s: Option<f64>,
    /// alpha_i as attr=weight (len, comp, freq, sari); repeatable.
    #[arg(long = "alpha", value_parser = parse_alpha, help_heading = "Filter")]
    alphas: Vec<(Attribute, f64)>,
    /// Drop an attribute from the filter; repeatable.
    #[arg(long, value_parser = parse_attribute, help_heading = "Filter")]
    disable: Vec<Attribute>,
    /// Minimum w_i + w_j for odds-dictionary entries.
    #[arg(long, help_heading = "Filter")]
    odds_floor: Option<usize>,

    #[arg(long, value_enum, help_heading = "Embedding provider")]
    provider: Option<ProviderArg>,
    /// Embedding TSV for the precomputed provider.
    #[arg(long, help_heading = "Embedding provider")]
    provider_path: Option<PathBuf>,
    /// Service base URL for the remote provider.
    #[arg(long, help_heading = "Embedding provider")]
    provider_url: Option<String>,

    /// Worker threads; output does not depend on it
    #[arg(long, help_heading = "Execution")]
    workers: Option<usize>,
    /// Documents per work unit
    #[arg(long, help_heading = "Execution")]
    chunk_size: Option<usize>,
    /// Recorded in the manifest; no pipeline stage is randomized
    #[arg(long, help_heading = "Execution")]
    seed: Option<u64>,
}

#[derive(Args)]
struct StatsArgs {
    /// Pairs to describe, JSON Lines {"source", "target"}.
    dataset: PathBuf,
    #[arg(long, default_value = "dataset")]
    name: String,
    /// Reference pairs reported alongside, JSON Lines.
    #[arg(long)]
    reference: Option<PathBuf>,
    #[arg(long, default_value = "reference")]
    reference_name: String,
    /// Lexicon for the complexity-delta histogram.
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// Run manifest whose stage counts are copied into the report.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Cue words, comma-separated [default: also,then,still].
    #[arg(long, value_delimiter = ',')]
    cue_words: Option<Vec<String>>,
    /// Conjunctions, comma-separated [default: and,as,since,because,when,if,but,though,although].
    #[arg(long, value_delimiter = ',')]
    conjunctions: Option<Vec<String>>,
    #[arg(short, long, default_value = "s4s-stats")]
    output_dir: PathBuf,
}

#[derive(Args)]
struct SariArgs {
    /// Complex input sentences, one per line.
    #[arg(long)]
    input: PathBuf,
    /// System outputs, line-aligned with the input.
    #[arg(long)]
    output: PathBuf,
    /// Reference file, line-aligned; repeat for multiple references.
    #[arg(long = "refs", required = true)]
    refs: Vec<PathBuf>,
    /// Also write per-line scores as JSON Lines here.
    #[arg(long)]
    per_line: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(short, long)]
    output_dir: PathBuf,
    /// Corpus documents
    #[arg(long, default_value_t = 100)]
    documents: usize,
    /// Reference corpus pairs
    #[arg(long, default_value_t = 400)]
    reference_pairs: usize,
    /// Generator seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn parse_attribute(s: &str) -> Result<Attribute, String> {
    Attribute::parse(s)
        .ok_or_else(|| format!("unknown attribute {s:?} (expected len, comp, freq or sari)"))
}

fn parse_alpha(s: &str) -> Result<(Attribute, f64), String> {
    let (name, value) = s.split_once('=').ok_or("expected attr=weight")?;
    let value: f64 = value.parse().map_err(|e| format!("{value:?}: {e}"))?;
    Ok((parse_attribute(name)?, value))
}

impl RunArgs {
    fn config(&self) -> Result<PipelineConfig, PipelineError> {
        let mut cfg = match &self.config {
            Some(p) => PipelineConfig::load(p)?,
            None => PipelineConfig::default(),
        };
        let set = |slot: &mut Option<PathBuf>, v: &Option<PathBuf>| {
            if v.is_some() {
                *slot = v.clone();
            }
        };
        let p = &mut cfg.paths;
        set(&mut p.corpus, &self.corpus);
        set(&mut p.lexicon, &self.lexicon);
        set(&mut p.refs, &self.refs);
        set(&mut p.odds, &self.odds);
        set(&mut p.stats, &self.stats);
        if let Some(d) = &self.output_dir {
            p.output_dir = d.clone();
        }

        let r = &mut cfg.reference;
        let new_corpus = self.reference_source.is_some()
            || self.reference_tsv.is_some()
            || self.reference_jsonl.is_some();
        if new_corpus {
            r.source = self.reference_source.clone();
            r.target = self.reference_target.clone();
            r.tsv = self.reference_tsv.clone();
            r.jsonl = self.reference_jsonl.clone();
        }
        set(&mut r.refs, &self.reference_refs);

        let a = &mut cfg.alignment;
        a.s_max = self.s_max.unwrap_or(a.s_max);
        a.s_min = self.s_min.unwrap_or(a.s_min);
        a.s_add = self.s_add.unwrap_or(a.s_add);
        a.l_max = self.l_max.unwrap_or(a.l_max);
        a.baseline_cutoff = self.baseline_cutoff.unwrap_or(a.baseline_cutoff);
        if let Some(s) = self.strategy {
            a.strategy = match s {
                StrategyArg::Algorithm1 => Strategy::Algorithm1,
                StrategyArg::Baseline => Strategy::BaselineThreshold,
            };
        }

        let f = &mut cfg.filter;
        f.t_s = self.t_s.unwrap_or(f.t_s);
        f.alphas.extend(self.alphas.iter().copied());
        f.disabled.extend(self.disable.iter().copied());
        cfg.odds_floor = self.odds_floor.unwrap_or(cfg.odds_floor);

        let pr = &mut cfg.provider;
        if let Some(k) = self.provider {
            pr.kind = match k {
                ProviderArg::Mock => ProviderKind::Mock,
                ProviderArg::Precomputed => ProviderKind::Precomputed,
                ProviderArg::Remote => ProviderKind::Remote,
            };
        }
        set(&mut pr.path, &self.provider_path);
        if self.provider_url.is_some() {
            pr.url = self.provider_url.clone();
        }

        cfg.workers = self.workers.unwrap_or(cfg.workers);
        cfg.chunk_size = self.chunk_size.unwrap_or(cfg.chunk_size);
        cfg.seed = self.seed.unwrap_or(cfg.seed);
        Ok(cfg)
    }
}

fn counts_line(c: &StageCounts) -> String {
    format!(
        "summary sentences {}, aligned {} (multi-source {}), unaligned {}, skipped {}",
        c.summary_sentences,
        c.aligned,
        c.aligned_multi_source,
        c.unaligned,
        c.alignment_skipped + c.score_skipped
    )
}

fn mined_line(o: &MineOutcome, t_s: f64) -> String {
    format!(
        "scored {}, accepted {} at T_s={t_s} -> {}",
        o.counts.scored,
        o.counts.accepted,
        o.s4s.display()
    )
}

fn t_s_effective(manifest: &std::path::Path) -> Option<f64> {
    let text = std::fs::read_to_string(manifest).ok()?;
    let v: serde_json::Value = serde_json::from_str(&text).ok()?;
    v["t_s_effective"].as_f64()
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    match cli.command {
        Command::Align(args) => {
            let cfg = args.config()?;
            let scorer = build_scorer(&cfg)?;
            let o = run_align(&cfg, scorer.as_ref())?;
            println!("align: {}", counts_line(&o.counts));
        }
        Command::FitReference(args) => {
            let cfg = args.config()?;
            let o = run_fit_reference(&cfg)?;
            for (a, s) in &o.stats.attrs {
                println!("{a}\tmu={:.6}\tsigma={:.6}\tn={}", s.mu, s.sigma, s.n);
            }
            println!("fit-reference: -> {}", o.stats_path.display());
        }
        Command::Score { run, aligned } => {
            let cfg = run.config()?;
            let aligned = aligned.unwrap_or_else(|| cfg.paths.output_dir.join("aligned.jsonl"));
            let o = run_score(&cfg, &aligned)?;
            let t_s = t_s_effective(&o.manifest).unwrap_or(cfg.filter.t_s);
            println!("score: {}", mined_line(&o, t_s));
        }
        Command::Mine(args) => {
            let cfg = args.config()?;
            let scorer = build_scorer(&cfg)?;
            let o = run_mine(&cfg, scorer.as_ref())?;
            let t_s = t_s_effective(&o.manifest).unwrap_or(cfg.filter.t_s);
            println!("mine: {}; {}", counts_line(&o.counts), mined_line(&o, t_s));
        }
        Command::Stats(args) => {
            let defaults = WordLists::default();
            let opts = StatsOptions {
                dataset: args.dataset,
                dataset_name: args.name,
                reference: args.reference,
                reference_name: args.reference_name,
                lexicon: args.lexicon,
                words: WordLists {
                    cue_words: args.cue_words.unwrap_or(defaults.cue_words),
                    conjunctions: args.conjunctions.unwrap_or(defaults.conjunctions),
                },
                manifest: args.manifest,
                output_dir: args.output_dir.clone(),
            };
            let report = run_stats(&opts)?;
            println!(
                "stats: {} pairs -> {}",
                report.dataset.pairs,
                args.output_dir.join("stats.txt").display()
            );
        }
        Command::Sari(args) => {
            let o = run_sari(&args.input, &args.output, &args.refs)?;
            if let Some(p) = &args.per_line {
                let mut text = String::new();
                for l in &o.lines {
                    text.push_str(
                        &serde_json::to_string(l)
                            .map_err(|e| PipelineError::Data(e.to_string()))?,
                    );
                    text.push('\n');
                }
                std::fs::write(p, text).map_err(|e| PipelineError::Io {
                    path: p.clone(),
                    message: e.to_string(),
                })?;
            }
            let m = o.mean;
            println!(
                "sari {:.6}\tf_add {:.6}\tf_keep {:.6}\tp_del {:.6}\tsentences {}",
                m.sari, m.f_add, m.f_keep, m.p_del, o.sentences
            );
        }
        Command::Synth(args) => {
            let opts = SynthOptions {
                documents: args.documents,
                reference_pairs: args.reference_pairs,
                seed: args.seed,
            };
            let files = write_synthetic(&args.output_dir, &opts)?;
            println!("synth: -> {}", files.config.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "warn" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .target(env_logger::Target::Stderr)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
