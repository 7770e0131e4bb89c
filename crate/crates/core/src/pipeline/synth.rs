//! Seeded synthetic fixtures: a document-summary corpus, a reference
//! simplification corpus, a lexicon, references and a config tying them
//! together. Summary sentences are near copies, fusions of two document
//! sentences, or unrelated text, so every alignment branch is exercised.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::config::{PathsConfig, PipelineConfig, ReferenceConfig};
use super::PipelineError;
use crate::aligner::pair_id;

const SYNONYMS: &[(&str, &str)] = &[
    ("utilize", "use"),
    ("commence", "start"),
    ("purchase", "buy"),
    ("approximately", "about"),
    ("demonstrate", "show"),
    ("assistance", "help"),
    ("individuals", "people"),
    ("numerous", "many"),
    ("sufficient", "enough"),
    ("terminate", "end"),
    ("endeavor", "try"),
    ("inquire", "ask"),
    ("residence", "home"),
    ("acquire", "get"),
    ("additional", "more"),
    ("subsequently", "later"),
    ("requirement", "need"),
    ("modification", "change"),
    ("objective", "goal"),
    ("fundamental", "basic"),
    ("comprehend", "understand"),
    ("construct", "build"),
    ("indicate", "say"),
    ("beverage", "drink"),
];

const NEUTRAL: &[&str] = &[
    "city", "council", "report", "market", "school", "river", "team", "week", "plan", "road",
    "water", "price", "family", "doctor", "local", "new", "old", "year", "police", "bridge",
    "village", "farm", "train", "museum", "garden", "north", "south", "winter", "summer",
    "station", "the", "a", "of", "in", "on", "for", "to", "was", "were", "has", "with", "from",
];

const CONJUNCTIONS: &[&str] = &[
    "and", "as", "since", "because", "when", "if", "but", "though", "although",
];
const CUES: &[&str] = &["also", "then", "still"];

const UNRELATED: &[&str] = &[
    "zebra", "quartz", "jukebox", "fjord", "kiwi", "wax", "ivy", "yak", "oxygen", "jazz", "vex",
    "quiz", "myth", "glyph", "pixie", "kayak",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SynthOptions {
    pub documents: usize,
    pub reference_pairs: usize,
    pub seed: u64,
}

impl Default for SynthOptions {
    fn default() -> Self {
        Self {
            documents: 100,
            reference_pairs: 400,
            seed: 0,
        }
    }
}

/// Files written by [`write_synthetic`].
#[derive(Debug, Clone)]
pub struct SynthFiles {
    pub corpus: PathBuf,
    pub reference_source: PathBuf,
    pub reference_target: PathBuf,
    pub reference_refs: PathBuf,
    pub lexicon: PathBuf,
    pub refs: PathBuf,
    pub config: PathBuf,
}

#[derive(Serialize)]
struct DocLine<'a> {
    id: &'a str,
    document: &'a [String],
    summary: &'a [String],
}

#[derive(Serialize)]
struct RefLine<'a> {
    pair_id: &'a str,
    refs: &'a [String],
}

fn render(words: &[&str]) -> String {
    let mut s = words.join(" ");
    if let Some(first) = s.get(0..1) {
        let upper = first.to_uppercase();
        s.replace_range(0..1, &upper);
    }
    s.push('.');
    s
}

/// A complex sentence of 8 to 14 words.
fn complex_words(rng: &mut impl Rng) -> Vec<&'static str> {
    let n = rng.gen_range(8..=14);
    (0..n)
        .map(|_| match rng.gen_range(0..40) {
            0..=13 => SYNONYMS.choose(rng).unwrap().0,
            14..=17 => *CONJUNCTIONS.choose(rng).unwrap(),
            18 => *CUES.choose(rng).unwrap(),
            _ => *NEUTRAL.choose(rng).unwrap(),
        })
        .collect()
}

/// Swaps most complex words for simple ones, drops some conjunctions and
/// neutral words, and sprinkles cue words.
fn simplify(rng: &mut impl Rng, words: &[&'static str], strength: f64) -> Vec<&'static str> {
    let mut out = Vec::with_capacity(words.len());
    for &w in words {
        if let Some(&(_, simple)) = SYNONYMS.iter().find(|(c, _)| *c == w) {
            out.push(if rng.gen_bool(strength) { simple } else { w });
        } else if CONJUNCTIONS.contains(&w) {
            if rng.gen_bool(0.5 * strength) {
                if rng.gen_bool(0.4) {
                    out.push(*CUES.choose(rng).unwrap());
                }
            } else {
                out.push(w);
            }
        } else if !rng.gen_bool(0.15 * strength) {
            out.push(w);
        }
    }
    if rng.gen_bool(0.25) {
        let at = rng.gen_range(0..=out.len());
        out.insert(at, *CUES.choose(rng).unwrap());
    }
    if out.is_empty() {
        out.push(NEUTRAL.choose(rng).unwrap());
    }
    out
}

fn unrelated(rng: &mut impl Rng) -> Vec<&'static str> {
    let n = rng.gen_range(5..=9);
    (0..n).map(|_| *UNRELATED.choose(rng).unwrap()).collect()
}

struct SynthDoc {
    id: String,
    document: Vec<String>,
    summary: Vec<String>,
    refs: Vec<String>,
}

fn synth_doc(rng: &mut impl Rng, index: usize) -> SynthDoc {
    let doc: Vec<Vec<&'static str>> = (0..rng.gen_range(5..=8))
        .map(|_| complex_words(rng))
        .collect();
    let n_summary = rng.gen_range(2..=4);
    let mut summary = Vec::with_capacity(n_summary);
    let mut refs = Vec::with_capacity(n_summary);
    for _ in 0..n_summary {
        let words = match rng.gen_range(0..10) {
            0..=4 => {
                let strength = rng.gen_range(0.2..0.9);
                let base = doc.choose(rng).unwrap();
                simplify(rng, base, strength)
            }
            5..=8 => {
                let mut picks: Vec<usize> = (0..doc.len()).collect();
                picks.shuffle(rng);
                let (a, b) = (&doc[picks[0]], &doc[picks[1]]);
                let mut fused: Vec<&'static str> = a[..a.len() / 2].to_vec();
                fused.extend_from_slice(&b[b.len() / 2..]);
                let strength = rng.gen_range(0.2..0.8);
                simplify(rng, &fused, strength)
            }
            _ => unrelated(rng),
        };
        let reference = simplify(rng, &words, 1.0);
        summary.push(render(&words));
        refs.push(render(&reference));
    }
    SynthDoc {
        id: format!("doc{index:05}"),
        document: doc.iter().map(|w| render(w)).collect(),
        summary,
        refs,
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, PipelineError> {
    Ok(BufWriter::new(
        File::create(path).map_err(|e| PipelineError::io(path, e))?,
    ))
}

fn write_json<T: Serialize>(
    out: &mut BufWriter<File>,
    path: &Path,
    value: &T,
) -> Result<(), PipelineError> {
    serde_json::to_writer(&mut *out, value).map_err(|e| PipelineError::io(path, e))?;
    writeln!(out).map_err(|e| PipelineError::io(path, e))
}

/// Writes the document corpus and per-sentence references, streaming.
pub fn write_corpus(dir: &Path, opts: &SynthOptions) -> Result<(PathBuf, PathBuf), PipelineError> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let corpus_path = dir.join("corpus.jsonl");
    let refs_path = dir.join("refs.jsonl");
    let mut corpus = create(&corpus_path)?;
    let mut refs = create(&refs_path)?;
    for i in 0..opts.documents {
        let d = synth_doc(&mut rng, i);
        write_json(
            &mut corpus,
            &corpus_path,
            &DocLine {
                id: &d.id,
                document: &d.document,
                summary: &d.summary,
            },
        )?;
        for (j, r) in d.refs.iter().enumerate() {
            let id = pair_id(&d.id, j);
            write_json(
                &mut refs,
                &refs_path,
                &RefLine {
                    pair_id: &id,
                    refs: std::slice::from_ref(r),
                },
            )?;
        }
    }
    corpus
        .flush()
        .map_err(|e| PipelineError::io(&corpus_path, e))?;
    refs.flush().map_err(|e| PipelineError::io(&refs_path, e))?;
    Ok((corpus_path, refs_path))
}

/// Writes every fixture file plus `config.toml` pointing at them with
/// outputs under `dir/out`.
pub fn write_synthetic(dir: &Path, opts: &SynthOptions) -> Result<SynthFiles, PipelineError> {
    std::fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
    let dir = dir.canonicalize().map_err(|e| PipelineError::io(dir, e))?;
    let (corpus, refs) = write_corpus(&dir, opts)?;

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x5e_ed0f_2ef5);
    let reference_source = dir.join("reference.src");
    let reference_target = dir.join("reference.tgt");
    let reference_refs = dir.join("reference_refs.jsonl");
    let mut src = create(&reference_source)?;
    let mut tgt = create(&reference_target)?;
    let mut rr = create(&reference_refs)?;
    for line in 1..=opts.reference_pairs {
        let complex = complex_words(&mut rng);
        let strength = rng.gen_range(0.5..1.0);
        let simple = simplify(&mut rng, &complex, strength);
        let reference = simplify(&mut rng, &complex, 1.0);
        writeln!(src, "{}", render(&complex))
            .map_err(|e| PipelineError::io(&reference_source, e))?;
        writeln!(tgt, "{}", render(&simple))
            .map_err(|e| PipelineError::io(&reference_target, e))?;
        let id = line.to_string();
        write_json(
            &mut rr,
            &reference_refs,
            &RefLine {
                pair_id: &id,
                refs: &[render(&reference)],
            },
        )?;
    }
    for (w, p) in [
        (&mut src, &reference_source),
        (&mut tgt, &reference_target),
        (&mut rr, &reference_refs),
    ] {
        w.flush().map_err(|e| PipelineError::io(p, e))?;
    }

    let lexicon = dir.join("lexicon.tsv");
    let mut lex = create(&lexicon)?;
    let mut entries: Vec<(&str, f64)> = Vec::new();
    for &(complex, simple) in SYNONYMS {
        entries.push((complex, rng.gen_range(3.5..5.0)));
        entries.push((simple, rng.gen_range(1.0..1.8)));
    }
    for &w in NEUTRAL.iter().chain(CONJUNCTIONS).chain(CUES) {
        entries.push((w, rng.gen_range(2.0..2.5)));
    }
    entries.sort_by(|a, b| a.0.cmp(b.0));
    entries.dedup_by(|a, b| a.0 == b.0);
    for (w, s) in entries {
        writeln!(lex, "{w}\t{s:.2}").map_err(|e| PipelineError::io(&lexicon, e))?;
    }
    lex.flush().map_err(|e| PipelineError::io(&lexicon, e))?;

    let cfg = PipelineConfig {
        paths: PathsConfig {
            corpus: Some(corpus.clone()),
            lexicon: Some(lexicon.clone()),
            refs: Some(refs.clone()),
            output_dir: dir.join("out"),
            ..PathsConfig::default()
        },
        reference: ReferenceConfig {
            name: "synthetic".into(),
            source: Some(reference_source.clone()),
            target: Some(reference_target.clone()),
            refs: Some(reference_refs.clone()),
            ..ReferenceConfig::default()
        },
        seed: opts.seed,
        ..PipelineConfig::default()
    };
    let config = dir.join("config.toml");
    std::fs::write(&config, cfg.to_toml_string()).map_err(|e| PipelineError::io(&config, e))?;

    Ok(SynthFiles {
        corpus,
        reference_source,
        reference_target,
        reference_refs,
        lexicon,
        refs,
        config,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_bytes() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let opts = SynthOptions {
            documents: 10,
            reference_pairs: 20,
            seed: 7,
        };
        let fa = write_synthetic(a.path(), &opts).unwrap();
        let fb = write_synthetic(b.path(), &opts).unwrap();
        for (x, y) in [
            (&fa.corpus, &fb.corpus),
            (&fa.lexicon, &fb.lexicon),
            (&fa.reference_target, &fb.reference_target),
        ] {
            assert_eq!(std::fs::read(x).unwrap(), std::fs::read(y).unwrap());
        }
        let cfg = PipelineConfig::load(&fa.config).unwrap();
        assert_eq!(cfg.paths.corpus.as_deref(), Some(fa.corpus.as_path()));
    }
}
