//! Diagnostic statistics over a mined dataset: length ratios, complexity
//! deltas, and odds ratios of cue words and conjunctions.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::attributes::{attr_complexity, odds_ratio, ComplexityLexicon, WordCounts};
use crate::corpus::ParallelPair;

pub const DEFAULT_CUE_WORDS: [&str; 3] = ["also", "then", "still"];
pub const DEFAULT_CONJUNCTIONS: [&str; 9] = [
    "and", "as", "since", "because", "when", "if", "but", "though", "although",
];

/// Length-ratio bins of width 0.1 over [0, 2), plus one overflow bin.
pub const LENGTH_BINS: usize = 20;
pub const DELTA_WIDTH: f64 = 0.25;
pub const DELTA_RANGE: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordLists {
    pub cue_words: Vec<String>,
    pub conjunctions: Vec<String>,
}

impl Default for WordLists {
    fn default() -> Self {
        Self {
            cue_words: DEFAULT_CUE_WORDS.iter().map(|s| s.to_string()).collect(),
            conjunctions: DEFAULT_CONJUNCTIONS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lo: f64,
    /// `None` for an unbounded last bin.
    pub hi: Option<f64>,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bins: Vec<HistogramBin>,
}

impl Histogram {
    pub fn total(&self) -> usize {
        self.bins.iter().map(|b| b.count).sum()
    }
}

/// Simple-side over complex-side odds ratio of one word, unsmoothed.
/// `ratio` is absent when the word is missing from either side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordOdds {
    pub word: String,
    pub ratio: Option<f64>,
    pub w_i: usize,
    pub w_j: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub name: String,
    pub pairs: usize,
    /// Pairs with an empty source, left out of the length-ratio histogram.
    pub zero_length_sources: usize,
    pub n_i: usize,
    pub n_j: usize,
    pub length_ratio: Histogram,
    pub complexity_delta: Option<Histogram>,
    pub cue_words: Vec<WordOdds>,
    pub conjunctions: Vec<WordOdds>,
}

/// Length-ratio bin of `target / source` token counts, computed exactly.
pub fn length_ratio_bin(target_len: usize, source_len: usize) -> usize {
    ((10 * target_len) / source_len).min(LENGTH_BINS)
}

pub fn delta_bin(delta: f64) -> usize {
    let n = (2.0 * DELTA_RANGE / DELTA_WIDTH) as usize;
    let b = ((delta + DELTA_RANGE) / DELTA_WIDTH).floor();
    if b.is_nan() || b < 0.0 {
        0
    } else {
        (b as usize).min(n - 1)
    }
}

fn word_odds(counts: &WordCounts, words: &[String]) -> Vec<WordOdds> {
    words
        .iter()
        .map(|w| {
            let w = w.to_lowercase();
            let (w_i, w_j) = (counts.simple_count(&w), counts.complex_count(&w));
            let ratio = if w_i == 0 {
                None
            } else {
                odds_ratio(w_i, w_j, counts.n_simple, counts.n_complex, false)
            };
            WordOdds {
                word: w,
                ratio,
                w_i,
                w_j,
            }
        })
        .collect()
}

/// Statistics over `(source, target)` pairs; `target` is the simple side.
pub fn dataset_stats<I>(
    name: &str,
    pairs: I,
    lexicon: Option<&ComplexityLexicon>,
    words: &WordLists,
) -> DatasetStats
where
    I: IntoIterator<Item = ParallelPair>,
{
    let mut counts = WordCounts::default();
    let mut length = [0usize; LENGTH_BINS + 1];
    let n_delta = (2.0 * DELTA_RANGE / DELTA_WIDTH) as usize;
    let mut delta = vec![0usize; n_delta];
    let (mut n, mut zero) = (0, 0);
    for p in pairs {
        n += 1;
        counts.add_pair(&p);
        match p.source.token_len() {
            0 => zero += 1,
            s => length[length_ratio_bin(p.target.token_len(), s)] += 1,
        }
        if let Some(lex) = lexicon {
            delta[delta_bin(attr_complexity(&p, lex))] += 1;
        }
    }
    let length_ratio = Histogram {
        bins: (0..=LENGTH_BINS)
            .map(|b| HistogramBin {
                lo: b as f64 / 10.0,
                hi: (b < LENGTH_BINS).then(|| (b + 1) as f64 / 10.0),
                count: length[b],
            })
            .collect(),
    };
    let complexity_delta = lexicon.map(|_| Histogram {
        bins: (0..n_delta)
            .map(|b| HistogramBin {
                lo: -DELTA_RANGE + b as f64 * DELTA_WIDTH,
                hi: Some(-DELTA_RANGE + (b + 1) as f64 * DELTA_WIDTH),
                count: delta[b],
            })
            .collect(),
    });
    DatasetStats {
        name: name.to_string(),
        pairs: n,
        zero_length_sources: zero,
        n_i: counts.n_simple,
        n_j: counts.n_complex,
        length_ratio,
        complexity_delta,
        cue_words: word_odds(&counts, &words.cue_words),
        conjunctions: word_odds(&counts, &words.conjunctions),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub dataset: DatasetStats,
    pub reference: Option<DatasetStats>,
    /// Pair counts per pipeline stage, when a run manifest is available.
    pub stage_counts: Option<BTreeMap<String, usize>>,
}

fn fmt_ratio(r: Option<f64>) -> String {
    r.map_or_else(|| "-".to_string(), |r| format!("{r:.2}"))
}

impl StatsReport {
    /// Odds-ratio table: one two-column block per dataset, reference first,
    /// with cue words (higher is simpler) above conjunctions (lower is
    /// simpler).
    pub fn render_table(&self) -> String {
        let mut blocks: Vec<&DatasetStats> = Vec::new();
        blocks.extend(self.reference.as_ref());
        blocks.push(&self.dataset);

        let word_w = DEFAULT_CONJUNCTIONS
            .iter()
            .map(|w| w.len())
            .chain(blocks.iter().flat_map(|b| {
                b.cue_words
                    .iter()
                    .chain(&b.conjunctions)
                    .map(|w| w.word.len())
            }))
            .chain(["conjunctions".len()])
            .max()
            .unwrap_or(12);
        let ratio_w = "odds ratio (down)".len();
        let block_w = word_w + ratio_w + 3;
        let rule = {
            let mut s = String::from("+");
            for _ in &blocks {
                s.push_str(&"-".repeat(block_w + 2));
                s.push('+');
            }
            s
        };

        let mut out = String::new();
        let section = |out: &mut String,
                       label: &str,
                       arrow: &str,
                       pick: fn(&DatasetStats) -> &Vec<WordOdds>| {
            let _ = writeln!(out, "{rule}");
            let mut line = String::from("|");
            for b in &blocks {
                let _ = write!(line, " {:<block_w$} |", b.name);
            }
            let _ = writeln!(out, "{line}");
            let mut line = String::from("|");
            for _ in &blocks {
                let _ = write!(
                    line,
                    " {label:<word_w$} | {:<ratio_w$} |",
                    format!("odds ratio ({arrow})")
                );
            }
            let _ = writeln!(out, "{line}");
            let _ = writeln!(out, "{rule}");
            let rows = blocks.iter().map(|b| pick(b).len()).max().unwrap_or(0);
            for r in 0..rows {
                let mut line = String::from("|");
                for b in &blocks {
                    match pick(b).get(r) {
                        Some(w) => {
                            let _ = write!(
                                line,
                                " {:<word_w$} | {:>ratio_w$} |",
                                w.word,
                                fmt_ratio(w.ratio)
                            );
                        }
                        None => {
                            let _ = write!(line, " {:<word_w$} | {:>ratio_w$} |", "", "");
                        }
                    }
                }
                let _ = writeln!(out, "{line}");
            }
            let _ = writeln!(out, "{rule}");
        };
        section(&mut out, "cue words", "up", |b| &b.cue_words);
        out.push('\n');
        section(&mut out, "conjunctions", "down", |b| &b.conjunctions);
        out.push('\n');
        for b in &blocks {
            let _ = writeln!(
                out,
                "{}: {} pairs, {} with empty source",
                b.name, b.pairs, b.zero_length_sources
            );
        }
        if let Some(counts) = &self.stage_counts {
            out.push('\n');
            let w = counts.keys().map(String::len).max().unwrap_or(0);
            for (k, v) in counts {
                let _ = writeln!(out, "{k:<w$}  {v}");
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairs(rows: &[(&str, &str)]) -> Vec<ParallelPair> {
        rows.iter()
            .enumerate()
            .map(|(i, (s, t))| ParallelPair::new((i + 1).to_string(), s, t))
            .collect()
    }

    #[test]
    fn identity_corpus_point_mass() {
        let lex = ComplexityLexicon::from_entries([("cat", 2.0), ("sat", 1.0)]).unwrap();
        let p = pairs(&[
            ("the cat sat .", "the cat sat ."),
            ("a b c", "a b c"),
            ("x", "x"),
        ]);
        let s = dataset_stats("id", p, Some(&lex), &WordLists::default());
        let ones: Vec<_> = s.length_ratio.bins.iter().filter(|b| b.count > 0).collect();
        assert_eq!(ones.len(), 1);
        assert_eq!((ones[0].lo, ones[0].count), (1.0, 3));
        let delta = s.complexity_delta.unwrap();
        let nz: Vec<_> = delta.bins.iter().filter(|b| b.count > 0).collect();
        assert_eq!(nz.len(), 1);
        assert_eq!(nz[0].lo, 0.0);
        assert_eq!(delta.total(), 3);
    }

    #[test]
    fn planted_because() {
        // Equal side sizes; "because" twice on the simple side, once on the
        // complex side.
        let p = pairs(&[("because x y z", "because because y z")]);
        let s = dataset_stats("planted", p, None, &WordLists::default());
        let because = s.conjunctions.iter().find(|w| w.word == "because").unwrap();
        assert_eq!((because.w_i, because.w_j), (2, 1));
        assert_eq!(because.ratio, Some(2.0));
        let and = s.conjunctions.iter().find(|w| w.word == "and").unwrap();
        assert_eq!(and.ratio, None);
    }

    #[test]
    fn length_bins_exact() {
        assert_eq!(length_ratio_bin(3, 10), 3);
        assert_eq!(length_ratio_bin(7, 10), 7);
        assert_eq!(length_ratio_bin(10, 10), 10);
        assert_eq!(length_ratio_bin(19, 10), 19);
        assert_eq!(length_ratio_bin(20, 10), 20);
        assert_eq!(length_ratio_bin(90, 10), 20);
        assert_eq!(delta_bin(0.0), 12);
        assert_eq!(delta_bin(-9.0), 0);
        assert_eq!(delta_bin(9.0), 23);
    }

    #[test]
    fn histograms_sum_to_pairs() {
        let lex = ComplexityLexicon::from_entries([("a", 1.0)]).unwrap();
        let p = pairs(&[("a b c d", "a"), ("a", "a b c d e f g h i"), ("x y", "x")]);
        let s = dataset_stats("d", p, Some(&lex), &WordLists::default());
        assert_eq!(s.length_ratio.total(), 3);
        assert_eq!(s.complexity_delta.unwrap().total(), 3);
    }

    #[test]
    fn table_has_both_sections_and_columns() {
        let words = WordLists::default();
        let report = StatsReport {
            dataset: dataset_stats("S4S", pairs(&[("and then", "then also")]), None, &words),
            reference: Some(dataset_stats(
                "WikiLarge",
                pairs(&[("still x", "still x")]),
                None,
                &words,
            )),
            stage_counts: None,
        };
        let table = report.render_table();
        assert!(table.contains("WikiLarge"));
        assert!(table.contains("S4S"));
        assert!(table.contains("cue words"));
        assert!(table.contains("conjunctions"));
        assert!(table.contains("although"));
        let still_row = table.lines().find(|l| l.contains("still")).unwrap();
        assert!(still_row.contains("1.00"));
        let rows = table.lines().filter(|l| l.starts_with("| ")).count();
        // 2 header lines + 3 cue rows, 2 header lines + 9 conjunction rows.
        assert_eq!(rows, 16);
    }
}
