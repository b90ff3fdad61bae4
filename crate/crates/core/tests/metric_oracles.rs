//! Library metrics against the slow-path oracles on random corpora.

mod common;

use capharness::metrics::{bleu, cider, meteor, rouge_l, CiderVariant, EvalPair, SynonymTable};
use capharness::similarity::{cosine, BuiltinEmbedder};
use common::oracle;
use proptest::prelude::*;

// Small vocabulary with stem and synonym neighbours so every stage fires.
const VOCAB: &[&str] =
    &["a", "the", "dog", "dogs", "run", "runs", "running", "kid", "child", "big", "large", "red", "on", "grass"];

fn synonyms() -> SynonymTable {
    SynonymTable::parse("kid child\nbig large\n")
}

fn sentence(max: usize) -> impl Strategy<Value = String> {
    prop::collection::vec(prop::sample::select(VOCAB), 1..=max).prop_map(|w| w.join(" "))
}

fn corpus() -> impl Strategy<Value = Vec<EvalPair>> {
    prop::collection::vec((sentence(7), prop::collection::vec(sentence(7), 1..=3)), 1..=5).prop_map(|v| {
        v.into_iter().enumerate().map(|(i, (c, refs))| EvalPair::from_text(i.to_string(), &c, &refs).unwrap()).collect()
    })
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn bleu_matches_oracle(pairs in corpus()) {
        let got = bleu(&pairs, 4).unwrap();
        let want = oracle::bleu(&pairs);
        for k in 0..4 {
            prop_assert!(close(got.scores[k], want.scores[k]), "BLEU-{} {} vs {}", k + 1, got.scores[k], want.scores[k]);
        }
        prop_assert_eq!((got.testlen, got.reflen), (want.testlen, want.reflen));
    }

    #[test]
    fn rouge_matches_oracle(pairs in corpus()) {
        for p in &pairs {
            prop_assert!(close(rouge_l(p), oracle::rouge_l(p)));
        }
    }

    #[test]
    fn meteor_matches_oracle(pairs in corpus()) {
        let table = synonyms();
        for p in &pairs {
            for syn in [None, Some(&table)] {
                let want = p.references.iter().map(|r| oracle::meteor_pair(&p.candidate, r, syn)).fold(0.0, f64::max);
                let got = meteor(p, syn);
                prop_assert!(close(got, want), "{:?}: {} vs {}", p, got, want);
            }
        }
    }

    #[test]
    fn cider_matches_oracle(pairs in corpus()) {
        prop_assert!(close(cider(&pairs, CiderVariant::Plain).unwrap(), oracle::cider(&pairs, false)));
        prop_assert!(close(cider(&pairs, CiderVariant::D).unwrap(), oracle::cider(&pairs, true)));
    }

    #[test]
    fn builtin_embedding_matches_oracle(a in "[a-zé ]{0,20}", b in "[a-zé ]{0,20}") {
        let got = cosine(&BuiltinEmbedder::embed_one(&a), &BuiltinEmbedder::embed_one(&b)).unwrap();
        let want = oracle::cosine(&oracle::embed(&a), &oracle::embed(&b));
        prop_assert!((got - want).abs() <= 1e-12, "{} vs {}", got, want);
    }
}

#[test]
fn fixture_corpus_per_pair() {
    let pairs = common::eval_pairs(&common::metric_corpus());
    let table = SynonymTable::load(&common::fixture("synonyms.txt")).unwrap();
    for p in &pairs {
        let want = p.references.iter().map(|r| oracle::meteor_pair(&p.candidate, r, Some(&table))).fold(0.0, f64::max);
        assert!(close(meteor(p, Some(&table)), want), "{}", p.sample_id);
        assert!(close(rouge_l(p), oracle::rouge_l(p)), "{}", p.sample_id);
    }
}

#[test]
fn synonyms_raise_fixture_meteor() {
    let pairs = common::eval_pairs(&common::metric_corpus());
    let table = SynonymTable::load(&common::fixture("synonyms.txt")).unwrap();
    let kids = pairs.iter().find(|p| p.sample_id == "c4").unwrap();
    assert!(meteor(kids, Some(&table)) > meteor(kids, None));
}
