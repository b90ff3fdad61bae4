//! Cleans raw model output: markdown, list markers, hashtags and stray
//! punctuation are removed and text is lowercased.
//!
//! cargo run --example normalize_captions

use capharness::normalize::normalize_caption;

fn main() {
    let raw = [
        "**A grainy photo** of a beach.",
        "1. A blurry street with a car",
        "#noise a green field with a tree!",
        "- a red car driving down a street",
        "  , A Dog  runs\n on the GRASS.  ",
    ];
    for r in raw {
        let clean = normalize_caption(r);
        assert_eq!(normalize_caption(&clean), clean);
        println!("{:<40} -> {}", format!("{r:?}"), clean);
    }
}
