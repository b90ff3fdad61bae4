//! Multi-reference caption metrics: corpus BLEU-1..4, METEOR, ROUGE-L and
//! CIDEr / CIDEr-D, all over the shared [`tokenize`] output.
//!
//! Corpus aggregates are order independent: BLEU pools integer counts, and
//! per-pair metrics are averaged with [`stable_mean`], which sums the values
//! in sorted order.

mod bleu;
mod cider;
mod meteor;
mod rouge;
mod tokenize;

use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bleu::{bleu, sentence_bleu, BleuScores};
pub use cider::{cider, cider_per_pair, CiderVariant};
pub use meteor::{align, meteor, meteor_single, stem, MeteorDetail, SynonymTable};
pub use rouge::{lcs_len, rouge_l, rouge_l_single};
pub use tokenize::{tokenize, Tokens};

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("cannot score an empty corpus")]
    EmptyCorpus,
    #[error("every candidate in the corpus is empty")]
    EmptyCandidates,
    #[error("BLEU order must be between 1 and 4, got {0}")]
    InvalidOrder(usize),
    #[error("sample `{sample_id}` has no reference captions")]
    NoReferences { sample_id: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// A tokenized candidate with its references.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalPair {
    pub sample_id: String,
    pub candidate: Tokens,
    pub references: Vec<Tokens>,
}

impl EvalPair {
    pub fn new(sample_id: impl Into<String>, candidate: Tokens, references: Vec<Tokens>) -> Result<Self, MetricError> {
        let sample_id = sample_id.into();
        if references.is_empty() {
            return Err(MetricError::NoReferences { sample_id });
        }
        Ok(Self { sample_id, candidate, references })
    }

    pub fn from_text<S: AsRef<str>>(
        sample_id: impl Into<String>,
        candidate: &str,
        references: &[S],
    ) -> Result<Self, MetricError> {
        Self::new(sample_id, tokenize(candidate), references.iter().map(|r| tokenize(r.as_ref())).collect())
    }
}

/// Corpus-level scores in the layout of the summary tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusScores {
    pub bleu1: f64,
    pub bleu2: f64,
    pub bleu3: f64,
    pub bleu4: f64,
    pub meteor: f64,
    pub rouge_l: f64,
    pub cider: f64,
    pub testlen: usize,
    pub reflen: usize,
}

impl CorpusScores {
    /// `testlen / reflen`, or `None` when `reflen` is zero.
    pub fn ratio(&self) -> Option<f64> {
        (self.reflen > 0).then(|| self.testlen as f64 / self.reflen as f64)
    }

    /// `(name, value)` for every score column, in table order.
    pub fn named(&self) -> [(&'static str, f64); 7] {
        [
            ("bleu1", self.bleu1),
            ("bleu2", self.bleu2),
            ("bleu3", self.bleu3),
            ("bleu4", self.bleu4),
            ("meteor", self.meteor),
            ("rouge_l", self.rouge_l),
            ("cider", self.cider),
        ]
    }
}

/// Per-sample breakdown; BLEU here is sentence level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleScores {
    pub sample_id: String,
    pub bleu: [f64; 4],
    pub meteor: f64,
    pub rouge_l: f64,
    pub cider: f64,
    pub testlen: usize,
    pub reflen: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusEvaluation {
    pub scores: CorpusScores,
    pub samples: Vec<SampleScores>,
}

#[derive(Debug, Clone, Default)]
pub struct ScoreOptions {
    pub cider_variant: CiderVariant,
    pub synonyms: Option<SynonymTable>,
}

/// Mean whose value does not depend on the order of `values`.
pub fn stable_mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.iter().sum::<f64>() / sorted.len() as f64
}

/// All metrics with default options (CIDEr-D, no synonyms).
pub fn score_corpus(pairs: &[EvalPair]) -> Result<CorpusScores, MetricError> {
    Ok(evaluate_pairs(pairs, &ScoreOptions::default())?.scores)
}

pub fn evaluate_pairs(pairs: &[EvalPair], opts: &ScoreOptions) -> Result<CorpusEvaluation, MetricError> {
    let corpus_bleu = bleu(pairs, 4)?;
    let ciders = cider_per_pair(pairs, opts.cider_variant)?;
    let samples: Vec<SampleScores> = pairs
        .par_iter()
        .zip(ciders.par_iter())
        .map(|(p, &c)| {
            let sb = sentence_bleu(p, 4).expect("order 4 is valid");
            SampleScores {
                sample_id: p.sample_id.clone(),
                bleu: [sb.scores[0], sb.scores[1], sb.scores[2], sb.scores[3]],
                meteor: meteor(p, opts.synonyms.as_ref()),
                rouge_l: rouge_l(p),
                cider: c,
                testlen: sb.testlen,
                reflen: sb.reflen,
            }
        })
        .collect();
    let mean_of = |f: fn(&SampleScores) -> f64| stable_mean(&samples.iter().map(f).collect::<Vec<_>>());
    let scores = CorpusScores {
        bleu1: corpus_bleu.scores[0],
        bleu2: corpus_bleu.scores[1],
        bleu3: corpus_bleu.scores[2],
        bleu4: corpus_bleu.scores[3],
        meteor: mean_of(|s| s.meteor),
        rouge_l: mean_of(|s| s.rouge_l),
        cider: stable_mean(&ciders),
        testlen: corpus_bleu.testlen,
        reflen: corpus_bleu.reflen,
    };
    Ok(CorpusEvaluation { scores, samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn identity_corpus() -> Vec<EvalPair> {
        vec![
            EvalPair::from_text("1", "a man rides a horse", &["a man rides a horse", "someone on a horse"]).unwrap(),
            EvalPair::from_text("2", "two dogs play in the snow", &["two dogs play in the snow"]).unwrap(),
        ]
    }

    #[test]
    fn identity_scores() {
        let s = score_corpus(&identity_corpus()).unwrap();
        assert_eq!([s.bleu1, s.bleu2, s.bleu3, s.bleu4, s.rouge_l], [1.0; 5]);
        assert_eq!((s.testlen, s.reflen), (11, 11));
        assert_eq!(s.ratio(), Some(1.0));
    }

    #[test]
    fn table_row_round_trips() {
        let s = CorpusScores {
            bleu1: 0.6774,
            bleu2: 0.4640,
            bleu3: 0.3103,
            bleu4: 0.2057,
            meteor: 0.2075,
            rouge_l: 0.3994,
            cider: 0.4794,
            testlen: 9371,
            reflen: 9554,
        };
        let back: CorpusScores = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn pair_without_references_is_rejected() {
        assert!(matches!(EvalPair::from_text::<&str>("x", "a", &[]), Err(MetricError::NoReferences { .. })));
    }

    #[test]
    fn stable_mean_ignores_order() {
        let v = [0.1, 1e16, -1e16, 0.3];
        let mut w = v;
        w.reverse();
        assert_eq!(stable_mean(&v).to_bits(), stable_mean(&w).to_bits());
        assert_eq!(stable_mean(&[]), 0.0);
    }

    fn sentence() -> impl Strategy<Value = String> {
        proptest::collection::vec(proptest::sample::select(vec!["a", "b", "c", "dog", "cat", "runs"]), 0..7)
            .prop_map(|w| w.join(" "))
    }

    fn corpus() -> impl Strategy<Value = Vec<EvalPair>> {
        proptest::collection::vec((sentence(), proptest::collection::vec(sentence(), 1..4)), 1..6).prop_map(|items| {
            items
                .into_iter()
                .enumerate()
                .map(|(i, (c, refs))| EvalPair::from_text(i.to_string(), &format!("x {c}"), &refs).unwrap())
                .collect()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn scores_in_range(pairs in corpus()) {
            let s = score_corpus(&pairs).unwrap();
            for (name, v) in s.named() {
                let hi = if name == "cider" { 10.0 } else { 1.0 };
                prop_assert!((0.0..=hi + 1e-12).contains(&v), "{} = {}", name, v);
            }
            let plain = cider(&pairs, CiderVariant::Plain).unwrap();
            prop_assert!((0.0..=1.0 + 1e-12).contains(&plain));
        }

        #[test]
        fn permutation_is_bit_exact(pairs in corpus(), seed in any::<u64>()) {
            let mut shuffled = pairs.clone();
            let mut rng = crate::rng::Rng::new(seed);
            for i in (1..shuffled.len()).rev() {
                let j = (rng.next_u64() % (i as u64 + 1)) as usize;
                shuffled.swap(i, j);
            }
            let a = evaluate_pairs(&pairs, &ScoreOptions::default()).unwrap().scores;
            let b = evaluate_pairs(&shuffled, &ScoreOptions::default()).unwrap().scores;
            for ((_, x), (_, y)) in a.named().iter().zip(b.named()) {
                prop_assert_eq!(x.to_bits(), y.to_bits());
            }
            prop_assert_eq!(cider(&pairs, CiderVariant::Plain).unwrap().to_bits(), cider(&shuffled, CiderVariant::Plain).unwrap().to_bits());
        }

        #[test]
        fn duplication_preserves_bleu_meteor_rouge(pairs in corpus()) {
            let doubled: Vec<EvalPair> = pairs.iter().chain(pairs.iter()).cloned().collect();
            let a = score_corpus(&pairs).unwrap();
            let b = score_corpus(&doubled).unwrap();
            prop_assert_eq!([a.bleu1, a.bleu2, a.bleu3, a.bleu4], [b.bleu1, b.bleu2, b.bleu3, b.bleu4]);
            prop_assert!((a.meteor - b.meteor).abs() < 1e-12);
            prop_assert!((a.rouge_l - b.rouge_l).abs() < 1e-12);
            prop_assert_eq!((2 * a.testlen, 2 * a.reflen), (b.testlen, b.reflen));
        }

        #[test]
        fn duplication_preserves_plain_cider_when_candidates_use_reference_ngrams(
            pairs in corpus().prop_map(|ps| ps.into_iter().map(|p| {
                // Candidate drawn from its own first reference, so every
                // candidate n-gram has a nonzero document frequency.
                let cand = p.references[0].clone();
                EvalPair::new(p.sample_id, cand, p.references).unwrap()
            }).collect::<Vec<_>>())
        ) {
            let doubled: Vec<EvalPair> = pairs.iter().chain(pairs.iter()).cloned().collect();
            let a = cider(&pairs, CiderVariant::Plain).unwrap();
            let b = cider(&doubled, CiderVariant::Plain).unwrap();
            prop_assert!((a - b).abs() < 1e-12, "{} vs {}", a, b);
        }
    }
}
