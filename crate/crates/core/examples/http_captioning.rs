//! Captions the tiny fixture dataset through a running caption service.
//!
//! cargo run --example http_captioning -- http://localhost:8000 [basic|descriptive|reasoning]

use std::path::Path;

use anyhow::{Context, Result};
use capharness::datasets::{load_manifest, ManifestFormat};
use capharness::normalize::normalize_batch;
use capharness::providers::{captions_from_http, service_health, DecodingParams, PromptTier};

fn main() -> Result<()> {
    let mut args = std::env::args().skip(1);
    let Some(endpoint) = args.next() else {
        eprintln!("usage: http_captioning <service url> [tier]");
        return Ok(());
    };
    let tier: PromptTier = args.next().as_deref().unwrap_or("basic").parse()?;

    let models = service_health(&endpoint).context("service is not healthy")?;
    println!("service models: {models:?}");
    let model = models.first().cloned().unwrap_or_else(|| "unknown".into());

    let manifest =
        load_manifest(&Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/tiny.jsonl"), ManifestFormat::NativeJsonl)?;
    let batch = captions_from_http(&endpoint, &manifest, tier, &DecodingParams::default(), &model)?;
    for r in normalize_batch(batch.records) {
        println!("{:<8} {}", r.sample_id, r.normalized);
    }
    for e in batch.errors {
        println!("{:<8} failed: {}", e.sample_id, e.message);
    }
    Ok(())
}
