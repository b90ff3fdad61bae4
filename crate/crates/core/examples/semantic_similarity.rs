//! Embedding similarity between candidates and references using the
//! built-in character-trigram embedder. Pass a service URL to use a remote
//! /embed endpoint instead.
//!
//! cargo run --example semantic_similarity -- [http://localhost:8000]

use anyhow::Result;
use capharness::similarity::{similarity_corpus, EmbedderChoice, Reduction, TextPair};

fn main() -> Result<()> {
    let choice = match std::env::args().nth(1) {
        Some(url) => EmbedderChoice::Http(url),
        None => EmbedderChoice::Builtin,
    };
    let embedder = choice.build();
    let pairs = vec![
        TextPair {
            sample_id: "1".into(),
            candidate: "a dog runs on the grass".into(),
            references: vec!["a dog running across a lawn".into(), "a brown dog outside".into()],
        },
        TextPair {
            sample_id: "2".into(),
            candidate: "a plate of food".into(),
            references: vec!["two cars parked on a street".into()],
        },
    ];
    println!("embedder: {}", embedder.identity());
    for reduction in [Reduction::Max, Reduction::Mean] {
        let result = similarity_corpus(&pairs, embedder.as_ref(), reduction)?;
        println!("{reduction:?}: corpus {:.4}, per sample {:?}", result.corpus, result.per_sample);
    }
    Ok(())
}
