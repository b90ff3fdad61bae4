//! Corpus BLEU with per-reference clipping and no smoothing.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{EvalPair, MetricError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BleuScores {
    /// `scores[k - 1]` is BLEU-k.
    pub scores: Vec<f64>,
    /// Modified n-gram precisions `p_1..p_max_n`.
    pub precisions: Vec<f64>,
    pub brevity_penalty: f64,
    pub testlen: usize,
    pub reflen: usize,
}

#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct NgramCounts {
    matched: [u64; 4],
    total: [u64; 4],
    testlen: usize,
    reflen: usize,
}

pub(crate) fn ngram_counts(words: &[String], n: usize) -> HashMap<&[String], u64> {
    let mut counts = HashMap::new();
    if words.len() >= n {
        for w in words.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

/// Reference length closest to `c`; ties go to the shorter reference.
pub(crate) fn closest_ref_len(c: usize, refs: &[super::Tokens]) -> usize {
    refs.iter().map(|r| r.len()).min_by_key(|&l| (l.abs_diff(c), l)).unwrap_or(0)
}

pub(crate) fn pair_counts(pair: &EvalPair, max_n: usize) -> NgramCounts {
    let cand = &pair.candidate;
    let mut out = NgramCounts {
        testlen: cand.len(),
        reflen: closest_ref_len(cand.len(), &pair.references),
        ..Default::default()
    };
    for n in 1..=max_n {
        let cand_counts = ngram_counts(cand, n);
        let mut max_ref: HashMap<&[String], u64> = HashMap::new();
        for r in &pair.references {
            for (g, c) in ngram_counts(r, n) {
                let e = max_ref.entry(g).or_insert(0);
                *e = (*e).max(c);
            }
        }
        out.matched[n - 1] = cand_counts.iter().map(|(g, &c)| c.min(max_ref.get(g).copied().unwrap_or(0))).sum();
        out.total[n - 1] = cand.len().saturating_sub(n - 1) as u64;
    }
    out
}

fn finish(counts: &NgramCounts, max_n: usize) -> BleuScores {
    let (c, r) = (counts.testlen, counts.reflen);
    let brevity_penalty = if c == 0 {
        0.0
    } else if c > r {
        1.0
    } else {
        (1.0 - r as f64 / c as f64).exp()
    };
    let precisions: Vec<f64> = (0..max_n)
        .map(|i| if counts.total[i] == 0 { 0.0 } else { counts.matched[i] as f64 / counts.total[i] as f64 })
        .collect();
    let mut scores = Vec::with_capacity(max_n);
    let mut log_sum = 0.0;
    let mut zero = false;
    for (k, &p) in precisions.iter().enumerate() {
        if p == 0.0 {
            zero = true;
        } else {
            log_sum += p.ln();
        }
        scores.push(if zero { 0.0 } else { brevity_penalty * (log_sum / (k + 1) as f64).exp() });
    }
    BleuScores { scores, precisions, brevity_penalty, testlen: c, reflen: r }
}

fn check_max_n(max_n: usize) -> Result<(), MetricError> {
    if (1..=4).contains(&max_n) {
        Ok(())
    } else {
        Err(MetricError::InvalidOrder(max_n))
    }
}

/// Corpus-level BLEU-1..`max_n`: counts are pooled over all pairs before
/// the precisions are formed.
pub fn bleu(pairs: &[EvalPair], max_n: usize) -> Result<BleuScores, MetricError> {
    check_max_n(max_n)?;
    if pairs.is_empty() {
        return Err(MetricError::EmptyCorpus);
    }
    let mut total = NgramCounts::default();
    for p in pairs {
        let c = pair_counts(p, max_n);
        for i in 0..4 {
            total.matched[i] += c.matched[i];
            total.total[i] += c.total[i];
        }
        total.testlen += c.testlen;
        total.reflen += c.reflen;
    }
    if total.testlen == 0 {
        return Err(MetricError::EmptyCandidates);
    }
    Ok(finish(&total, max_n))
}

/// BLEU of a single pair; an empty candidate scores zero.
pub fn sentence_bleu(pair: &EvalPair, max_n: usize) -> Result<BleuScores, MetricError> {
    check_max_n(max_n)?;
    Ok(finish(&pair_counts(pair, max_n), max_n))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(c: &str, refs: &[&str]) -> EvalPair {
        EvalPair::from_text("s", c, refs).unwrap()
    }

    #[test]
    fn short_candidate_brevity_penalty() {
        let s = bleu(&[pair("the cat sat", &["the cat sat on the mat"])], 4).unwrap();
        assert_eq!(s.precisions[0], 1.0);
        assert!((s.scores[0] - (-1.0f64).exp()).abs() < 1e-12);
        assert_eq!((s.testlen, s.reflen), (3, 6));
        // No 4-gram in a 3-token candidate.
        assert_eq!(s.scores[3], 0.0);
    }

    #[test]
    fn identity_is_one() {
        let pairs = [
            pair("a man rides a horse", &["x y", "a man rides a horse"]),
            pair("two dogs play in snow", &["two dogs play in snow"]),
        ];
        let s = bleu(&pairs, 4).unwrap();
        assert_eq!(s.scores, vec![1.0; 4]);
    }

    #[test]
    fn clipping_per_reference() {
        // "the" appears at most twice in any single reference.
        let s = bleu(&[pair("the the the the", &["the cat the", "the dog"])], 1).unwrap();
        assert_eq!(s.precisions[0], 0.5);
    }

    #[test]
    fn closest_length_tie_prefers_shorter() {
        let p = pair("a b c d", &["a b c", "a b c d e"]);
        assert_eq!(closest_ref_len(4, &p.references), 3);
    }

    #[test]
    fn empty_corpus_and_empty_candidates() {
        assert!(matches!(bleu(&[], 4), Err(MetricError::EmptyCorpus)));
        assert!(matches!(bleu(&[pair("", &["a"])], 4), Err(MetricError::EmptyCandidates)));
        assert!(matches!(bleu(&[pair("a", &["a"])], 5), Err(MetricError::InvalidOrder(5))));
        let s = sentence_bleu(&pair("", &["a b"]), 4).unwrap();
        assert_eq!(s.scores, vec![0.0; 4]);
    }

    #[test]
    fn pooled_counts_do_not_zero_per_sample() {
        // The second candidate has no 4-gram match, but corpus BLEU-4 stays positive.
        let pairs = [pair("a b c d e", &["a b c d e"]), pair("p q r s", &["p q x s"])];
        let s = bleu(&pairs, 4).unwrap();
        assert!(s.scores[3] > 0.0);
        assert_eq!(s.precisions[3], 2.0 / 3.0);
    }

    #[test]
    fn higher_order_can_exceed_lower_order() {
        // Unigram "a" is clipped to 1 (max count in any single reference) but
        // each bigram is matched by a different reference.
        let s = bleu(&[pair("a b a", &["a b", "b a"])], 2).unwrap();
        assert!((s.precisions[0] - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(s.precisions[1], 1.0);
        assert!(s.scores[1] > s.scores[0]);
    }
}
