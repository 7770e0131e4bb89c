//! Peak heap while aligning a 100k-document corpus stays far below the
//! corpus size.

use std::alloc::{GlobalAlloc, Layout, System};
use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::sync::atomic::{AtomicUsize, Ordering};

use s4s_core::aligner::SimilarityScorer;
use s4s_core::embedding::EmbeddingError;
use s4s_core::pipeline::synth::{write_corpus, SynthOptions};
use s4s_core::pipeline::{run_align, PipelineConfig};

struct Counting;

static CURRENT: AtomicUsize = AtomicUsize::new(0);
static PEAK: AtomicUsize = AtomicUsize::new(0);

unsafe impl GlobalAlloc for Counting {
    unsafe fn alloc(&self, layout: Layout) -> *mut u8 {
        let p = System.alloc(layout);
        if !p.is_null() {
            let now = CURRENT.fetch_add(layout.size(), Ordering::Relaxed) + layout.size();
            PEAK.fetch_max(now, Ordering::Relaxed);
        }
        p
    }

    unsafe fn dealloc(&self, ptr: *mut u8, layout: Layout) {
        System.dealloc(ptr, layout);
        CURRENT.fetch_sub(layout.size(), Ordering::Relaxed);
    }
}

#[global_allocator]
static ALLOC: Counting = Counting;

/// Hash-derived similarities; keeps the run about the corpus, not embeddings.
struct HashScorer;

impl SimilarityScorer for HashScorer {
    fn score(&self, candidates: &[&str], target: &str) -> Result<Vec<f64>, EmbeddingError> {
        Ok(candidates
            .iter()
            .map(|c| {
                let mut h = DefaultHasher::new();
                (c, target).hash(&mut h);
                (h.finish() % 1000) as f64 / 1000.0
            })
            .collect())
    }

    fn model_id(&self) -> String {
        "hash".into()
    }
}

#[test]
fn align_memory_is_bounded_by_record_not_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let opts = SynthOptions {
        documents: 100_000,
        ..SynthOptions::default()
    };
    let (corpus, _) = write_corpus(dir.path(), &opts).unwrap();
    let corpus_bytes = std::fs::metadata(&corpus).unwrap().len() as usize;

    let mut cfg = PipelineConfig::default();
    cfg.paths.corpus = Some(corpus);
    cfg.paths.output_dir = dir.path().join("out");

    let baseline = CURRENT.load(Ordering::Relaxed);
    PEAK.store(baseline, Ordering::Relaxed);
    let out = run_align(&cfg, &HashScorer).unwrap();
    let growth = PEAK.load(Ordering::Relaxed) - baseline;

    assert_eq!(out.counts.documents, 100_000);
    assert!(out.counts.aligned > 0);
    // Duplicate-id tracking keeps 8 bytes per document; everything else is per chunk.
    let ceiling = 16 << 20;
    assert!(
        growth < ceiling && growth < corpus_bytes / 4,
        "peak heap growth {growth} bytes for a {corpus_bytes}-byte corpus"
    );
}
