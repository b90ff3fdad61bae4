//! ROUGE-L F-measure with β = 1.2, best reference per pair.

use super::EvalPair;

pub const BETA: f64 = 1.2;

/// Length of the longest common subsequence.
pub fn lcs_len(a: &[String], b: &[String]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { prev[j + 1].max(cur[j]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

pub fn rouge_l_single(cand: &[String], refr: &[String]) -> f64 {
    let lcs = lcs_len(cand, refr);
    if lcs == 0 {
        return 0.0;
    }
    let p = lcs as f64 / cand.len() as f64;
    let r = lcs as f64 / refr.len() as f64;
    let b2 = BETA * BETA;
    (1.0 + b2) * p * r / (r + b2 * p)
}

pub fn rouge_l(pair: &EvalPair) -> f64 {
    pair.references.iter().map(|r| rouge_l_single(&pair.candidate, r)).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::tokenize;

    fn r(c: &str, refr: &str) -> f64 {
        rouge_l_single(&tokenize(c), &tokenize(refr))
    }

    #[test]
    fn anchors() {
        assert_eq!(r("a b c d", "a b c d"), 1.0);
        assert!((r("the cat", "the cat sat") - 0.772_2).abs() < 1e-4);
        assert_eq!(r("red car", "blue boat"), 0.0);
        assert_eq!(r("", ""), 0.0);
    }

    #[test]
    fn lcs_is_subsequence_not_substring() {
        assert_eq!(lcs_len(&tokenize("a x b y c"), &tokenize("a b c")), 3);
    }

    #[test]
    fn best_reference_wins() {
        let p = EvalPair::from_text("s", "a b c", &["x y", "a b c"]).unwrap();
        assert_eq!(rouge_l(&p), 1.0);
    }
}
