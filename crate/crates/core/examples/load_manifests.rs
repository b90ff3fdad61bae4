//! Loads the three supported manifest formats and prints caption length
//! statistics for each.
//!
//! cargo run --example load_manifests

use std::path::Path;

use anyhow::Result;
use capharness::datasets::{caption_length_stats, load_manifest, ManifestFormat};

fn main() -> Result<()> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let inputs = [
        ("tiny.jsonl", ManifestFormat::NativeJsonl),
        ("flickr_sample.tsv", ManifestFormat::FlickrTsv),
        ("nocaps_sample.json", ManifestFormat::NocapsJson),
    ];
    for (file, format) in inputs {
        let manifest = load_manifest(&fixtures.join(file), format)?;
        let stats = caption_length_stats(&manifest)?;
        println!(
            "{:<16} {} samples, {} references, mean length {:.2}, median {:.1}",
            manifest.name,
            manifest.len(),
            stats.references,
            stats.mean,
            stats.median
        );
        for sample in &manifest.samples {
            println!("  {:<12} {:?} {}", sample.sample_id, sample.domain, sample.references[0]);
        }
    }
    Ok(())
}
