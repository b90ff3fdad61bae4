//! Renders the two result tables from stored run results, as markdown and
//! CSV.
//!
//! cargo run --example render_reports

use std::path::Path;

use anyhow::Result;
use capharness::harness::RunResult;
use capharness::report::{render_table1, render_table2, TableFormat};

fn main() -> Result<()> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let models = RunResult::load(&fixtures.join("table1_result.json"))?;
    let noise = RunResult::load(&fixtures.join("table2_result.json"))?;
    println!("{}", render_table1(&models, TableFormat::Markdown)?);
    println!("{}", render_table2(&noise, TableFormat::Markdown)?);
    print!("{}", render_table2(&noise, TableFormat::Csv)?);
    Ok(())
}
