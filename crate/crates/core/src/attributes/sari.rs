use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::AttributeError;
use crate::corpus::{SentenceRecord, MAX_ORDER};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SariScore {
    pub f_add: f64,
    pub f_keep: f64,
    pub p_del: f64,
    pub sari: f64,
}

/// Per-order operation scores before averaging.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderScores {
    pub keep_p: f64,
    pub keep_r: f64,
    pub del_p: f64,
    pub add_p: f64,
    pub add_r: f64,
}

type Counts<'a> = HashMap<&'a [String], usize>;

fn counts(tokens: &[String], n: usize) -> Counts<'_> {
    let mut m = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *m.entry(w).or_insert(0) += 1;
        }
    }
    m
}

/// Mean of per-gram fractions, or the empty-denominator convention.
fn fraction(sum: f64, denom: usize, other_empty: bool) -> f64 {
    if denom == 0 {
        if other_empty {
            1.0
        } else {
            0.0
        }
    } else {
        sum / denom as f64
    }
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

/// Scores for one n-gram order. System-side counts are scaled by the number
/// of references; reference counts are summed over references, so each
/// reference n-gram is weighted by the share of references containing it.
pub fn order_scores(
    input: &[String],
    output: &[String],
    refs: &[&[String]],
    n: usize,
) -> OrderScores {
    let num_refs = refs.len();
    let s = counts(input, n);
    let c = counts(output, n);
    let mut r: Counts = HashMap::new();
    for reference in refs {
        for (g, k) in counts(reference, n) {
            *r.entry(g).or_insert(0) += k;
        }
    }
    let s_rep = |g: &[String]| s.get(g).copied().unwrap_or(0) * num_refs;
    let c_rep = |g: &[String]| c.get(g).copied().unwrap_or(0) * num_refs;
    let r_of = |g: &[String]| r.get(g).copied().unwrap_or(0);

    // Keep: input ∩ output against input ∩ references.
    let (mut keep_p_sum, mut keep_sys) = (0.0, 0usize);
    for &g in c.keys() {
        let sys = s_rep(g).min(c_rep(g));
        if sys > 0 {
            keep_sys += 1;
            keep_p_sum += sys.min(r_of(g)) as f64 / sys as f64;
        }
    }
    let (mut keep_r_sum, mut keep_all) = (0.0, 0usize);
    for &g in s.keys() {
        let all = s_rep(g).min(r_of(g));
        if all > 0 {
            keep_all += 1;
            let good = s_rep(g).min(c_rep(g)).min(r_of(g));
            keep_r_sum += good as f64 / all as f64;
        }
    }

    // Delete: input ∖ output against input ∖ references.
    let (mut del_sum, mut del_sys, mut del_all) = (0.0, 0usize, 0usize);
    for &g in s.keys() {
        let sys = s_rep(g).saturating_sub(c_rep(g));
        if sys > 0 {
            del_sys += 1;
            del_sum += sys.saturating_sub(r_of(g)) as f64 / sys as f64;
        }
        if s_rep(g) > r_of(g) {
            del_all += 1;
        }
    }

    // Add: set semantics.
    let add_sys = c.keys().filter(|g| !s.contains_key(*g)).count();
    let add_good = c
        .keys()
        .filter(|g| !s.contains_key(*g) && r.contains_key(*g))
        .count();
    let add_all = r.keys().filter(|g| !s.contains_key(*g)).count();

    OrderScores {
        keep_p: fraction(keep_p_sum, keep_sys, keep_all == 0),
        keep_r: fraction(keep_r_sum, keep_all, keep_sys == 0),
        del_p: fraction(del_sum, del_sys, del_all == 0),
        add_p: fraction(add_good as f64, add_sys, add_all == 0),
        add_r: fraction(add_good as f64, add_all, add_sys == 0),
    }
}

/// SARI over token sequences. Precision and recall are averaged over
/// orders 1..=4 before taking F1.
pub fn sari_tokens(
    input: &[String],
    output: &[String],
    refs: &[&[String]],
) -> Result<SariScore, AttributeError> {
    if refs.is_empty() {
        return Err(AttributeError::NoReferences);
    }
    let mut acc = [0.0f64; 5];
    for n in 1..=MAX_ORDER {
        let o = order_scores(input, output, refs, n);
        for (a, v) in acc
            .iter_mut()
            .zip([o.keep_p, o.keep_r, o.del_p, o.add_p, o.add_r])
        {
            *a += v;
        }
    }
    let [keep_p, keep_r, p_del, add_p, add_r] = acc.map(|v| v / MAX_ORDER as f64);
    let f_keep = f1(keep_p, keep_r);
    let f_add = f1(add_p, add_r);
    Ok(SariScore {
        f_add,
        f_keep,
        p_del,
        sari: (f_add + f_keep + p_del) / 3.0,
    })
}

pub fn sari(
    input: &SentenceRecord,
    output: &SentenceRecord,
    refs: &[SentenceRecord],
) -> Result<SariScore, AttributeError> {
    let refs: Vec<&[String]> = refs.iter().map(SentenceRecord::tokens).collect();
    sari_tokens(input.tokens(), output.tokens(), &refs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rec(s: &str) -> SentenceRecord {
        SentenceRecord::new("x", s)
    }

    #[test]
    fn identity_scores_one() {
        let s = sari(
            &rec("the cat sat"),
            &rec("the cat sat"),
            &[rec("the cat sat")],
        )
        .unwrap();
        assert_eq!((s.f_add, s.f_keep, s.p_del, s.sari), (1.0, 1.0, 1.0, 1.0));
    }

    #[test]
    fn no_references_is_an_error() {
        assert_eq!(
            sari(&rec("a"), &rec("a"), &[]),
            Err(AttributeError::NoReferences)
        );
    }

    #[test]
    fn deletion_matching_reference() {
        // Unigrams: keep {a,b,d} all good, delete {c} good, nothing added.
        // Orders 2-4 follow the same pattern, so every component is 1.
        let s = sari(&rec("a b c d"), &rec("a b d"), &[rec("a b d")]).unwrap();
        assert!((s.p_del - 1.0).abs() < 1e-12);
        assert!((s.f_keep - 1.0).abs() < 1e-12);
        assert!((s.f_add - 1.0).abs() < 1e-12);
    }

    #[test]
    fn disjoint_output_keeps_and_adds_nothing() {
        // Long enough that every order has n-grams on each side.
        let s = sari(&rec("a b c d e"), &rec("v w x y z"), &[rec("a b c d e")]).unwrap();
        assert_eq!(s.f_keep, 0.0);
        assert_eq!(s.f_add, 0.0);
    }

    #[test]
    fn vacuous_orders_score_one() {
        // Orders 3 and 4 have nothing to keep and nothing demanded.
        let o = order_scores(&toks("a b c"), &toks("x y"), &[&toks("a b")], 3);
        assert_eq!((o.keep_p, o.keep_r), (1.0, 1.0));
        let o = order_scores(&toks("a b c"), &toks("x y"), &[&toks("a b")], 1);
        assert_eq!((o.keep_p, o.keep_r), (0.0, 0.0));
    }

    fn toks(s: &str) -> Vec<String> {
        s.split(' ').map(str::to_string).collect()
    }

    #[test]
    fn sari_is_mean_of_components() {
        let s = sari(
            &rec("a b c d e"),
            &rec("a c f"),
            &[rec("a c d"), rec("b f")],
        )
        .unwrap();
        assert!((s.sari - (s.f_add + s.f_keep + s.p_del) / 3.0).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn components_in_unit_interval(
            inp in proptest::collection::vec(0u8..5, 1..8),
            out in proptest::collection::vec(0u8..5, 0..8),
            refs in proptest::collection::vec(proptest::collection::vec(0u8..5, 0..8), 1..4),
        ) {
            let words = |v: &Vec<u8>| v.iter().map(|b| ((b'a' + b) as char).to_string()).collect::<Vec<_>>();
            let refs: Vec<Vec<String>> = refs.iter().map(words).collect();
            let refs: Vec<&[String]> = refs.iter().map(Vec::as_slice).collect();
            let s = sari_tokens(&words(&inp), &words(&out), &refs).unwrap();
            for v in [s.f_add, s.f_keep, s.p_del, s.sari] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
            prop_assert!((s.sari - (s.f_add + s.f_keep + s.p_del) / 3.0).abs() < 1e-9);
        }
    }
}
