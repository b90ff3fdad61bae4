//! Runs the fixture grid (one dataset, three conditions, two caption files)
//! and prints every cell.
//!
//! cargo run --example full_run -- [out_dir]

use std::path::{Path, PathBuf};

use anyhow::Result;
use capharness::harness::{run, RunConfig};

fn main() -> Result<()> {
    let config = RunConfig::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/run.toml"))?;
    let out =
        std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("capharness-full-run"));
    let result = run(&config, &out)?;
    for cell in &result.cells {
        let bleu4 = cell.scores.as_ref().map_or(f64::NAN, |s| s.bleu4);
        println!(
            "{:<6} {:<20} {:<16} valid={} bleu4={:.4} similarity={:.4}",
            cell.dataset,
            cell.condition_id,
            cell.model_id,
            cell.valid,
            bleu4,
            cell.similarity.unwrap_or(f64::NAN)
        );
    }
    println!("run written to {}", out.display());
    Ok(())
}
