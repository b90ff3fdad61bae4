//! Scores candidate captions against references with BLEU-1..4, METEOR,
//! ROUGE-L and both CIDEr variants, with and without a synonym table.
//!
//! cargo run --example score_captions

use anyhow::Result;
use capharness::metrics::{evaluate_pairs, CiderVariant, EvalPair, ScoreOptions, SynonymTable};

fn main() -> Result<()> {
    let pairs = vec![
        EvalPair::from_text(
            "1",
            "a man walks along the beach",
            &["a man walking on a sunny beach", "someone strolls by the sea"],
        )?,
        EvalPair::from_text("2", "kids playing football on a field", &["children play soccer on a grassy field"])?,
        EvalPair::from_text("3", "a lady cooking dinner", &["a woman preparing food in a kitchen"])?,
    ];
    let synonyms = SynonymTable::parse("kids children\nfootball soccer\nlady woman\ncooking preparing\n");

    for (label, opts) in [
        ("CIDEr-D", ScoreOptions { cider_variant: CiderVariant::D, synonyms: None }),
        ("CIDEr", ScoreOptions { cider_variant: CiderVariant::Plain, synonyms: None }),
        ("CIDEr-D + synonyms", ScoreOptions { cider_variant: CiderVariant::D, synonyms: Some(synonyms.clone()) }),
    ] {
        let eval = evaluate_pairs(&pairs, &opts)?;
        println!("{label}");
        for (name, value) in eval.scores.named() {
            println!("  {name:<8} {value:.4}");
        }
        println!("  testlen {} reflen {}", eval.scores.testlen, eval.scores.reflen);
    }
    Ok(())
}
