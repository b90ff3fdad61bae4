use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde::Deserialize;

use capharness::corruptions::{corrupt_dataset, Condition, CorruptionKind, CorruptionSpec, Level, MixtureSpec};
use capharness::datasets::{caption_length_stats, load_manifest, LengthStats, ManifestFormat};
use capharness::harness::{self, build_pairs, similarity_pairs, RunConfig, RunResult, StepConfig};
use capharness::metrics::{evaluate_pairs, CiderVariant, ScoreOptions, SynonymTable};
use capharness::normalize::normalize_batch;
use capharness::providers::{
    captions_from_file, captions_from_http, captions_to_jsonl, DecodingParams, PromptTier, ProviderSource,
};
use capharness::report::{render_length_histogram, render_table1, render_table2, ChartFormat, TableFormat};
use capharness::similarity::{similarity_corpus, EmbedderChoice, Reduction};

#[derive(Parser)]
#[command(name = "capharness", version, about = "Robustness benchmark for image-captioning models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a corrupted copy of a dataset.
    Corrupt {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value = "native_jsonl")]
        format: ManifestFormat,
        #[arg(long, required_unless_present = "mixture")]
        kind: Option<CorruptionKind>,
        #[arg(long, required_unless_present = "mixture")]
        level: Option<Level>,
        /// Parameter override, e.g. `--param sigma=0.3`.
        #[arg(long = "param", value_parser = parse_param)]
        params: Vec<(String, f64)>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// TOML or JSON file with `steps = [{ kind, level, params }]`.
        #[arg(long, conflicts_with_all = ["kind", "level", "params"])]
        mixture: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Convert manifests or summarise caption lengths.
    Manifest {
        #[command(subcommand)]
        action: ManifestAction,
    },
    /// Normalise raw captions in a caption JSONL file.
    Normalize {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "unknown")]
        model: String,
    },
    /// Collect captions for a manifest from a file or a /caption service.
    Caption {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value = "native_jsonl")]
        format: ManifestFormat,
        /// `file:<path>` or `http:<url>`.
        #[arg(long)]
        provider: ProviderSource,
        #[arg(long, default_value = "basic")]
        tier: PromptTier,
        #[arg(long, default_value = "model")]
        model: String,
        #[arg(long)]
        temperature: Option<f64>,
        #[arg(long)]
        top_k: Option<u32>,
        #[arg(long)]
        beam_size: Option<u32>,
        #[arg(long)]
        max_tokens: Option<u32>,
        /// Output caption JSONL; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score a caption file against a manifest's references.
    Evaluate {
        #[arg(long)]
        candidates: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value = "native_jsonl")]
        format: ManifestFormat,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "d")]
        cider: CiderVariant,
        #[arg(long)]
        synonyms: Option<PathBuf>,
        #[arg(long, default_value = "builtin")]
        embedder: EmbedderChoice,
        /// Only score captions with this condition id.
        #[arg(long)]
        condition: Option<String>,
        /// Only score captions with this prompt tier.
        #[arg(long)]
        tier: Option<PromptTier>,
    },
    /// Execute a full run from a TOML or JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `out_dir` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render tables or histograms from a run directory.
    Report {
        /// Run directory, or a `result.json` for tables 1 and 2.
        #[arg(long)]
        run: PathBuf,
        /// `1`, `2` or `hist`.
        #[arg(long)]
        table: String,
        /// `markdown` or `csv` for tables (default markdown), `csv` or `svg` for hist (default csv).
        #[arg(long)]
        format: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-metric change between the clean cells of one run and the cells of another.
    Compare {
        #[arg(long)]
        clean: PathBuf,
        #[arg(long)]
        noisy: PathBuf,
    },
}

#[derive(Subcommand)]
enum ManifestAction {
    /// Rewrite any supported format as native JSONL.
    Convert {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        format: ManifestFormat,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        name: Option<String>,
    },
    /// Print reference caption length statistics as JSON.
    Stats {
        #[arg(long = "in", required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, default_value = "native_jsonl")]
        format: ManifestFormat,
    },
}

fn parse_param(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or("expected name=value")?;
    Ok((k.trim().to_string(), v.trim().parse().map_err(|e| format!("{v}: {e}"))?))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MixtureFile {
    steps: Vec<StepConfig>,
}

fn read_mixture(path: &Path) -> Result<MixtureSpec> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let file: MixtureFile = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text)?
    } else {
        toml::from_str(&text)?
    };
    let mut steps = Vec::new();
    for s in file.steps {
        let mut spec = CorruptionSpec::new(s.kind, s.level);
        for (k, v) in s.params {
            spec = spec.with_param(&k, v)?;
        }
        steps.push(spec);
    }
    Ok(MixtureSpec::new(steps)?)
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Corrupt { manifest, format, kind, level, params, seed, mixture, out } => {
            let m = load_manifest(&manifest, format)?;
            let condition = match mixture {
                Some(path) => Condition::Mixture(read_mixture(&path)?),
                None => {
                    let (Some(kind), Some(level)) = (kind, level) else { bail!("--kind and --level are required") };
                    let mut spec = CorruptionSpec::new(kind, level);
                    for (k, v) in params {
                        spec = spec.with_param(&k, v)?;
                    }
                    Condition::Single(spec)
                }
            };
            let result = corrupt_dataset(&m, &condition, seed, &out)?;
            for e in &result.errors {
                eprintln!("skipped {}: {}", e.sample_id, e.message);
            }
            println!("wrote {} of {} samples to {}", result.manifest.len(), m.len(), out.display());
        }
        Command::Manifest { action: ManifestAction::Convert { input, format, out, name } } => {
            let mut m = load_manifest(&input, format)?;
            if let Some(name) = name {
                m.name = name;
            }
            m.save_jsonl(&out)?;
            println!("wrote {} samples to {}", m.len(), out.display());
        }
        Command::Manifest { action: ManifestAction::Stats { inputs, format } } => {
            let stats = inputs
                .iter()
                .map(|p| Ok(caption_length_stats(&load_manifest(p, format)?)?))
                .collect::<Result<Vec<LengthStats>>>()?;
            println!("{}", serde_json::to_string_pretty(&stats)?);
        }
        Command::Normalize { input, out, model } => {
            let records = normalize_batch(captions_from_file(&input, &model)?);
            let mut text = String::new();
            for r in &records {
                text.push_str(&serde_json::to_string(r)?);
                text.push('\n');
            }
            std::fs::write(&out, text).with_context(|| format!("writing {}", out.display()))?;
        }
        Command::Caption {
            manifest,
            format,
            provider,
            tier,
            model,
            temperature,
            top_k,
            beam_size,
            max_tokens,
            out,
        } => {
            let m = load_manifest(&manifest, format)?;
            let records = match provider {
                ProviderSource::File(p) => captions_from_file(Path::new(&p), &model)?
                    .into_iter()
                    .filter(|r| r.prompt_tier == tier && m.get(&r.sample_id).is_some())
                    .collect(),
                ProviderSource::Http(url) => {
                    let d = DecodingParams::default();
                    let decoding = DecodingParams {
                        temperature: temperature.unwrap_or(d.temperature),
                        top_k: top_k.unwrap_or(d.top_k),
                        beam_size: beam_size.unwrap_or(d.beam_size),
                        max_tokens: max_tokens.unwrap_or(d.max_tokens),
                    };
                    let batch = captions_from_http(&url, &m, tier, &decoding, &model)?;
                    for e in &batch.errors {
                        eprintln!("failed {}: {}", e.sample_id, e.message);
                    }
                    batch.records
                }
            };
            emit(&captions_to_jsonl(&records), out.as_deref())?;
        }
        Command::Evaluate { candidates, manifest, format, out, cider, synonyms, embedder, condition, tier } => {
            let m = load_manifest(&manifest, format)?;
            let records: Vec<_> = normalize_batch(captions_from_file(&candidates, "candidate")?)
                .into_iter()
                .filter(|r| condition.as_ref().is_none_or(|c| &r.condition_id == c))
                .filter(|r| tier.is_none_or(|t| r.prompt_tier == t))
                .collect();
            if let Some(r) = records.iter().find(|r| m.get(&r.sample_id).is_none()) {
                bail!("caption for unknown sample `{}`", r.sample_id);
            }
            let pairs = build_pairs(&m, &records)?;
            let synonyms = synonyms.map(|p| SynonymTable::load(&p)).transpose()?;
            let eval = evaluate_pairs(&pairs, &ScoreOptions { cider_variant: cider, synonyms })?;
            let sim = similarity_corpus(&similarity_pairs(&pairs), embedder.build().as_ref(), Reduction::Max)?;
            let doc = serde_json::json!({
                "scores": eval.scores,
                "similarity": sim.corpus,
                "ratio": eval.scores.ratio(),
                "samples": eval.samples,
            });
            std::fs::write(&out, serde_json::to_string_pretty(&doc)? + "\n")?;
        }
        Command::Run { config, out } => {
            let cfg = RunConfig::load(&config)?;
            let out_dir = match (out, &cfg.out_dir) {
                (Some(o), _) => o,
                (None, Some(o)) => cfg.resolve(o),
                (None, None) => bail!("no output directory: pass --out or set out_dir in the config"),
            };
            let result = harness::run(&cfg, &out_dir)?;
            let invalid = result.cells.iter().filter(|c| !c.valid).count();
            println!("{} cells ({} invalid) written to {}", result.cells.len(), invalid, out_dir.display());
        }
        Command::Report { run, table, format, out } => {
            let text = match table.as_str() {
                "1" | "2" => {
                    let result = load_result(&run)?;
                    let format: TableFormat = format.as_deref().unwrap_or("markdown").parse()?;
                    if table == "1" {
                        render_table1(&result, format)?
                    } else {
                        render_table2(&result, format)?
                    }
                }
                "hist" => {
                    let lock: serde_json::Value =
                        serde_json::from_str(&std::fs::read_to_string(run.join("config.lock.json"))?)?;
                    let mut stats = Vec::new();
                    for d in lock["config"]["datasets"].as_array().into_iter().flatten() {
                        let name = d["name"].as_str().unwrap_or_default();
                        let path = run
                            .join("datasets")
                            .join(format!("{}.stats.json", capharness::corruptions::file_stem_for(name)));
                        let text =
                            std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
                        stats.push(serde_json::from_str::<LengthStats>(&text)?);
                    }
                    render_length_histogram(&stats, format.as_deref().unwrap_or("csv").parse::<ChartFormat>()?)?
                }
                other => bail!("unknown table `{other}` (expected 1, 2 or hist)"),
            };
            emit(&text, out.as_deref())?;
        }
        Command::Compare { clean, noisy } => {
            let table = harness::compare(&load_result(&clean)?, &load_result(&noisy)?);
            for w in &table.warnings {
                eprintln!("warning: {w}");
            }
            println!("{}", serde_json::to_string_pretty(&table)?);
        }
    }
    Ok(())
}

/// A run directory or a `result.json` file.
fn load_result(path: &Path) -> Result<RunResult, harness::HarnessError> {
    if path.is_dir() {
        RunResult::load(&path.join("result.json"))
    } else {
        RunResult::load(path)
    }
}
