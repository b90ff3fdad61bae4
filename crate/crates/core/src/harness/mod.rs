//! End-to-end runs: corrupt, caption, normalise and score every
//! (dataset, condition, model, tier) cell of a [`RunConfig`].
//!
//! Output layout under the run directory:
//!
//! ```text
//! config.lock.json                 parsed config plus resolved conditions
//! result.json                      RunResult, one MetricReport per cell
//! errors.jsonl                     per-sample and per-cell failures
//! datasets/<name>.stats.json       reference length statistics
//! cells/<key>/scores.json          the cell's MetricReport
//! cells/<key>/per_sample.jsonl     captions and per-sample scores
//! cache/images/<sha256>.{png,jpg}  corrupted images
//! cache/captions/<sha256>.json     captions returned by HTTP providers
//! ```
//!
//! Cache keys hash the content that determines the result (source image
//! bytes, condition with its per-sample seed, prompt, decoding parameters,
//! model and endpoint), so a rerun only recomputes what changed. Outputs hold
//! no timestamps, latencies or absolute paths.

mod config;

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use config::{ConditionConfig, DatasetConfig, ProviderConfig, RunConfig, StepConfig};

use crate::corruptions::{corrupt_image_bytes, file_stem_for, Condition, CorruptionError};
use crate::datasets::{caption_length_stats, load_manifest, DatasetError, Manifest, Sample};
use crate::metrics::{evaluate_pairs, CorpusScores, EvalPair, MetricError, SampleScores, ScoreOptions, SynonymTable};
use crate::normalize::normalize_batch;
use crate::providers::{captions_from_file, CaptionRecord, HttpCaptioner, PromptTier, ProviderError, ProviderSource};
use crate::rng::sample_seed;
use crate::similarity::{similarity_corpus, Embedder, TextPair};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid run config: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Corruption(#[from] CorruptionError),
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("{}: {message}", path.display())]
    Json { path: PathBuf, message: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io { path: path.to_path_buf(), source }
}

/// Aggregate scores of one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub dataset: String,
    pub condition_id: String,
    pub condition: Condition,
    pub model_id: String,
    pub tier: PromptTier,
    /// False when too many samples failed or scoring was impossible.
    pub valid: bool,
    pub scores: Option<CorpusScores>,
    pub similarity: Option<f64>,
    /// `testlen / reflen`.
    pub ratio: Option<f64>,
    pub samples: usize,
    pub scored: usize,
    pub errors: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl MetricReport {
    pub fn key(&self) -> CellKey {
        CellKey { dataset: self.dataset.clone(), model_id: self.model_id.clone(), tier: self.tier }
    }

    /// Directory name under `cells/`.
    pub fn dir_name(&self) -> String {
        file_stem_for(&format!("{}__{}__{}__{}", self.dataset, self.condition_id, self.model_id, self.tier))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellKey {
    pub dataset: String,
    pub model_id: String,
    pub tier: PromptTier,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub name: String,
    pub run_seed: u64,
    pub embedder: String,
    /// Cells in config order: dataset, then condition, then provider, then tier.
    pub cells: Vec<MetricReport>,
}

impl RunResult {
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        serde_json::from_str(&text).map_err(|e| HarnessError::Json { path: path.to_path_buf(), message: e.to_string() })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("run result serialises");
        s.push('\n');
        s
    }
}

/// One line of `errors.jsonl`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub dataset: String,
    pub condition_id: String,
    pub model_id: String,
    pub tier: PromptTier,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_id: Option<String>,
    pub stage: String,
    pub message: String,
}

/// One line of a cell's `per_sample.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub sample_id: String,
    pub raw: String,
    pub normalized: String,
    pub scores: SampleScores,
    pub similarity: Option<f64>,
}

/// Everything computed for one cell.
#[derive(Debug, Clone)]
pub struct CellOutcome {
    pub report: MetricReport,
    pub samples: Vec<SampleRecord>,
    pub errors: Vec<ErrorRecord>,
}

/// Candidate/reference pairs for scoring. Candidates are the normalised
/// captions; references are tokenized straight from the manifest and never
/// normalised.
pub fn build_pairs(manifest: &Manifest, records: &[CaptionRecord]) -> Result<Vec<EvalPair>, MetricError> {
    let by_id: HashMap<&str, &Sample> = manifest.samples.iter().map(|s| (s.sample_id.as_str(), s)).collect();
    records
        .iter()
        .map(|r| {
            let refs = by_id.get(r.sample_id.as_str()).map(|s| s.references.as_slice()).unwrap_or(&[]);
            EvalPair::from_text(r.sample_id.clone(), &r.normalized, refs)
        })
        .collect()
}

/// Text used for embedding: the shared tokenizer's output re-joined, for
/// candidates and references alike.
pub fn similarity_pairs(pairs: &[EvalPair]) -> Vec<TextPair> {
    pairs
        .iter()
        .map(|p| TextPair {
            sample_id: p.sample_id.clone(),
            candidate: p.candidate.joined(),
            references: p.references.iter().map(|r| r.joined()).collect(),
        })
        .collect()
}

/// Shared settings for scoring a cell.
pub struct ScoringContext<'a> {
    pub options: ScoreOptions,
    pub embedder: &'a dyn Embedder,
    pub reduction: crate::similarity::Reduction,
    pub failure_threshold: f64,
}

/// Scores one cell from its captions and failures. `failures` are samples
/// lost in earlier stages; they count toward the failure threshold.
pub fn score_cell(
    mut report: MetricReport,
    manifest: &Manifest,
    records: Vec<CaptionRecord>,
    mut errors: Vec<ErrorRecord>,
    ctx: &ScoringContext,
) -> CellOutcome {
    let records = normalize_batch(records);
    report.samples = manifest.samples.len();
    report.scored = 0;
    let failed = report.samples - records.len().min(report.samples);
    let mut samples = Vec::new();
    let too_many = report.samples == 0 || failed as f64 / report.samples as f64 > ctx.failure_threshold;

    if too_many {
        report.error = Some(format!("{failed} of {} samples failed", report.samples));
    } else {
        match build_pairs(manifest, &records).and_then(|pairs| Ok((evaluate_pairs(&pairs, &ctx.options)?, pairs))) {
            Ok((eval, pairs)) => {
                let sims = match similarity_corpus(&similarity_pairs(&pairs), ctx.embedder, ctx.reduction) {
                    Ok(s) => Some(s),
                    Err(e) => {
                        errors.push(error_record(&report, None, "similarity", e.to_string()));
                        None
                    }
                };
                report.scored = pairs.len();
                report.similarity = sims.as_ref().map(|s| s.corpus);
                report.ratio = eval.scores.ratio();
                report.scores = Some(eval.scores);
                samples = records
                    .into_iter()
                    .zip(eval.samples)
                    .enumerate()
                    .map(|(i, (r, scores))| SampleRecord {
                        sample_id: r.sample_id,
                        raw: r.raw,
                        normalized: r.normalized,
                        scores,
                        similarity: sims.as_ref().map(|s| s.per_sample[i]),
                    })
                    .collect();
            }
            Err(e) => report.error = Some(e.to_string()),
        }
    }
    if let Some(message) = &report.error {
        errors.push(error_record(&report, None, "cell", message.clone()));
    }
    report.valid = report.error.is_none();
    report.errors = errors.len();
    CellOutcome { report, samples, errors }
}

fn error_record(report: &MetricReport, sample_id: Option<&str>, stage: &str, message: String) -> ErrorRecord {
    ErrorRecord {
        dataset: report.dataset.clone(),
        condition_id: report.condition_id.clone(),
        model_id: report.model_id.clone(),
        tier: report.tier,
        sample_id: sample_id.map(str::to_string),
        stage: stage.to_string(),
        message,
    }
}

fn sha256_hex(parts: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    hex::encode(h.finalize())
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    std::fs::write(path, bytes).map_err(io_err(path))
}

/// Where a sample's image for a condition lives, or why it is unavailable.
type ImageSlot = Result<PathBuf, String>;

/// Corrupts every sample of `manifest` under `condition` into the image
/// cache. Clean conditions point at the source files.
fn prepare_images(manifest: &Manifest, condition: &Condition, run_seed: u64, cache_dir: &Path) -> Vec<ImageSlot> {
    if condition.is_clean() {
        return manifest.samples.iter().map(|s| Ok(manifest.image_path(s))).collect();
    }
    let condition_id = condition.id();
    manifest
        .samples
        .par_iter()
        .map(|sample| {
            let src = manifest.image_path(sample);
            let bytes = std::fs::read(&src).map_err(|e| format!("{}: {e}", sample.image_path.display()))?;
            let seeded = condition.reseeded(sample_seed(run_seed, &sample.sample_id, &condition_id));
            let spec_json = serde_json::to_vec(&seeded).expect("condition serialises");
            let key = sha256_hex(&[b"image-v1", &Sha256::digest(&bytes), &spec_json]);
            for ext in ["png", "jpg"] {
                let cached = cache_dir.join(format!("{key}.{ext}"));
                if cached.is_file() {
                    return Ok(cached);
                }
            }
            let encoded = corrupt_image_bytes(&seeded, &bytes).map_err(|e| e.to_string())?;
            let dest = cache_dir.join(format!("{key}.{}", encoded.extension));
            write_file(&dest, &encoded.bytes).map_err(|e| e.to_string())?;
            Ok(dest)
        })
        .collect()
}

#[derive(Serialize, Deserialize)]
struct CachedCaption {
    caption: String,
}

/// `(sample_id, message)` for a sample that could not be captioned.
type SampleError = (String, String);

/// Captions the available images over HTTP, using and filling the caption cache.
#[allow(clippy::too_many_arguments)]
fn http_captions(
    endpoint: &str,
    manifest: &Manifest,
    images: &[ImageSlot],
    tier: PromptTier,
    config: &RunConfig,
    model_id: &str,
    condition_id: &str,
    cache_dir: &Path,
) -> Result<(Vec<CaptionRecord>, Vec<SampleError>), ProviderError> {
    let decoding_json = serde_json::to_vec(&config.decoding).expect("decoding serialises");
    let mut records: Vec<Option<CaptionRecord>> = vec![None; manifest.samples.len()];
    let mut failures: Vec<(String, String)> = Vec::new();
    let mut pending: Vec<(usize, String, Vec<u8>)> = Vec::new();

    for (i, (sample, slot)) in manifest.samples.iter().zip(images).enumerate() {
        let path = match slot {
            Ok(p) => p,
            Err(_) => continue,
        };
        let bytes = match std::fs::read(path) {
            Ok(b) => b,
            Err(e) => {
                failures.push((sample.sample_id.clone(), format!("{}: {e}", sample.image_path.display())));
                continue;
            }
        };
        let key = sha256_hex(&[
            b"caption-v1",
            &Sha256::digest(&bytes),
            tier.template().as_bytes(),
            &decoding_json,
            model_id.as_bytes(),
            endpoint.as_bytes(),
        ]);
        let cached = std::fs::read(cache_dir.join(format!("{key}.json")))
            .ok()
            .and_then(|b| serde_json::from_slice::<CachedCaption>(&b).ok());
        match cached {
            Some(c) => records[i] = Some(record(sample, model_id, tier, condition_id, c.caption)),
            None => pending.push((i, key, bytes)),
        }
    }

    if !pending.is_empty() {
        let sub = Manifest {
            name: manifest.name.clone(),
            samples: pending.iter().map(|(i, _, _)| manifest.samples[*i].clone()).collect(),
            provenance: BTreeMap::new(),
            base_dir: None,
        };
        let read = |j: usize| Ok(pending[j].2.clone());
        let batch = HttpCaptioner::new(endpoint).caption_manifest(
            &sub,
            &read,
            tier,
            &config.decoding,
            model_id,
            condition_id,
        )?;
        let index: HashMap<&str, usize> =
            pending.iter().enumerate().map(|(j, (i, _, _))| (manifest.samples[*i].sample_id.as_str(), j)).collect();
        for mut r in batch.records {
            let j = index[r.sample_id.as_str()];
            let (i, key, _) = &pending[j];
            let body = serde_json::to_vec(&CachedCaption { caption: r.raw.clone() }).expect("caption serialises");
            // A cache write failure only costs a recomputation next time.
            let _ = write_file(&cache_dir.join(format!("{key}.json")), &body);
            r.latency_ms = None;
            records[*i] = Some(r);
        }
        failures.extend(batch.errors.into_iter().map(|f| (f.sample_id, f.message)));
    }
    Ok((records.into_iter().flatten().collect(), failures))
}

fn record(sample: &Sample, model_id: &str, tier: PromptTier, condition_id: &str, raw: String) -> CaptionRecord {
    CaptionRecord {
        sample_id: sample.sample_id.clone(),
        model_id: model_id.to_string(),
        prompt_tier: tier,
        condition_id: condition_id.to_string(),
        raw,
        normalized: String::new(),
        latency_ms: None,
    }
}

/// Executes the run described by `config`, writing artifacts under `out_dir`.
pub fn run(config: &RunConfig, out_dir: &Path) -> Result<RunResult, HarnessError> {
    config.validate()?;
    let conditions = config.resolved_conditions()?;

    let mut manifests = Vec::new();
    for d in &config.datasets {
        let mut m = load_manifest(&config.resolve(&d.path), d.format)?;
        if m.is_empty() {
            return Err(DatasetError::EmptyManifest.into());
        }
        m.name = d.name.clone();
        manifests.push(m);
    }
    let synonyms = match &config.synonyms {
        Some(p) => Some(SynonymTable::load(&config.resolve(p))?),
        None => None,
    };
    let embedder = config.embedder.build();
    let ctx = ScoringContext {
        options: ScoreOptions { cider_variant: config.cider_variant, synonyms },
        embedder: embedder.as_ref(),
        reduction: config.similarity_reduction,
        failure_threshold: config.failure_threshold,
    };

    std::fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let cells_dir = out_dir.join("cells");
    if cells_dir.exists() {
        std::fs::remove_dir_all(&cells_dir).map_err(io_err(&cells_dir))?;
    }
    let lock = serde_json::json!({
        "config": config,
        "conditions": conditions.iter().map(|c| serde_json::json!({ "id": c.id(), "condition": c })).collect::<Vec<_>>(),
        "embedder": embedder.identity(),
    });
    write_file(&out_dir.join("config.lock.json"), pretty(&lock).as_bytes())?;
    for m in &manifests {
        let stats = caption_length_stats(m)?;
        write_file(
            &out_dir.join("datasets").join(format!("{}.stats.json", file_stem_for(&m.name))),
            pretty(&stats).as_bytes(),
        )?;
    }

    let image_cache = out_dir.join("cache").join("images");
    let caption_cache = out_dir.join("cache").join("captions");
    let mut cells = Vec::new();
    let mut all_errors = Vec::new();
    let mut file_cache: HashMap<String, Result<Vec<CaptionRecord>, String>> = HashMap::new();

    for manifest in &manifests {
        for condition in &conditions {
            let condition_id = condition.id();
            let images = prepare_images(manifest, condition, config.run_seed, &image_cache);
            for provider in &config.providers {
                let source = provider.source_for(&manifest.name)?;
                for &tier in &config.tiers {
                    let report = MetricReport {
                        dataset: manifest.name.clone(),
                        condition_id: condition_id.clone(),
                        condition: condition.clone(),
                        model_id: provider.model_id.clone(),
                        tier,
                        valid: false,
                        scores: None,
                        similarity: None,
                        ratio: None,
                        samples: manifest.len(),
                        scored: 0,
                        errors: 0,
                        error: None,
                    };
                    let mut errors: Vec<ErrorRecord> = manifest
                        .samples
                        .iter()
                        .zip(&images)
                        .filter_map(|(s, slot)| {
                            slot.as_ref().err().map(|m| error_record(&report, Some(&s.sample_id), "image", m.clone()))
                        })
                        .collect();
                    let records = match &source {
                        ProviderSource::File(p) => {
                            let loaded = file_cache.entry(p.clone()).or_insert_with(|| {
                                captions_from_file(&config.resolve(Path::new(p)), &provider.model_id)
                                    .map_err(|e| e.to_string())
                            });
                            match loaded {
                                Ok(all) => {
                                    let wanted: HashMap<&str, &CaptionRecord> = all
                                        .iter()
                                        .filter(|r| {
                                            r.model_id == provider.model_id
                                                && r.prompt_tier == tier
                                                && r.condition_id == condition_id
                                        })
                                        .map(|r| (r.sample_id.as_str(), r))
                                        .collect();
                                    let mut out = Vec::new();
                                    for (s, slot) in manifest.samples.iter().zip(&images) {
                                        if slot.is_err() {
                                            continue;
                                        }
                                        match wanted.get(s.sample_id.as_str()) {
                                            Some(r) => out.push((*r).clone()),
                                            None => errors.push(error_record(
                                                &report,
                                                Some(&s.sample_id),
                                                "caption",
                                                "no caption in provider file".into(),
                                            )),
                                        }
                                    }
                                    Ok(out)
                                }
                                Err(e) => Err(e.clone()),
                            }
                        }
                        ProviderSource::Http(url) => {
                            match http_captions(
                                url,
                                manifest,
                                &images,
                                tier,
                                config,
                                &provider.model_id,
                                &condition_id,
                                &caption_cache,
                            ) {
                                Ok((records, failures)) => {
                                    errors.extend(
                                        failures
                                            .into_iter()
                                            .map(|(id, m)| error_record(&report, Some(&id), "caption", m)),
                                    );
                                    Ok(records)
                                }
                                Err(ProviderError::Unreachable { endpoint, missing }) => {
                                    errors.extend(missing.iter().map(|id| {
                                        error_record(
                                            &report,
                                            Some(id),
                                            "caption",
                                            format!("no response from {endpoint}"),
                                        )
                                    }));
                                    Err(format!("captioning service unreachable; {} sample(s) missing", missing.len()))
                                }
                                Err(e) => Err(e.to_string()),
                            }
                        }
                    };
                    let outcome = match records {
                        Ok(records) => score_cell(report, manifest, records, errors, &ctx),
                        Err(message) => {
                            let mut report = report;
                            errors.push(error_record(&report, None, "provider", message.clone()));
                            report.error = Some(message);
                            report.errors = errors.len();
                            CellOutcome { report, samples: Vec::new(), errors }
                        }
                    };
                    write_cell(&cells_dir, &outcome)?;
                    all_errors.extend(outcome.errors);
                    cells.push(outcome.report);
                }
            }
        }
    }

    let mut errors_jsonl = String::new();
    for e in &all_errors {
        errors_jsonl.push_str(&serde_json::to_string(e).expect("error record serialises"));
        errors_jsonl.push('\n');
    }
    write_file(&out_dir.join("errors.jsonl"), errors_jsonl.as_bytes())?;

    let result =
        RunResult { name: config.name.clone(), run_seed: config.run_seed, embedder: embedder.identity(), cells };
    write_file(&out_dir.join("result.json"), result.to_json().as_bytes())?;
    Ok(result)
}

fn pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("value serialises");
    s.push('\n');
    s
}

fn write_cell(cells_dir: &Path, outcome: &CellOutcome) -> Result<(), HarnessError> {
    let dir = cells_dir.join(outcome.report.dir_name());
    write_file(&dir.join("scores.json"), pretty(&outcome.report).as_bytes())?;
    let mut lines = String::new();
    for s in &outcome.samples {
        lines.push_str(&serde_json::to_string(s).expect("sample record serialises"));
        lines.push('\n');
    }
    write_file(&dir.join("per_sample.jsonl"), lines.as_bytes())
}

/// Change of one metric between a clean and a noisy cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricDelta {
    pub metric: String,
    pub clean: f64,
    pub noisy: f64,
    /// `noisy - clean`.
    pub delta: f64,
    /// `noisy / clean`; `None` (undefined) when the clean score is zero.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegradationRow {
    pub dataset: String,
    pub condition_id: String,
    pub model_id: String,
    pub tier: PromptTier,
    pub metrics: Vec<MetricDelta>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DegradationTable {
    pub rows: Vec<DegradationRow>,
    pub warnings: Vec<String>,
}

fn metric_values(r: &MetricReport) -> Vec<(&'static str, f64)> {
    let mut out: Vec<(&'static str, f64)> = r.scores.as_ref().map(|s| s.named().to_vec()).unwrap_or_default();
    if let Some(s) = r.similarity {
        out.push(("similarity", s));
    }
    out
}

fn key_label(k: &CellKey) -> String {
    format!("{}/{}/{}", k.dataset, k.model_id, k.tier)
}

/// Per-metric deltas of every valid `noisy` cell against the clean cell of
/// `clean` with the same (dataset, model, tier). Keys present on one side
/// only are skipped with a warning.
pub fn compare(clean: &RunResult, noisy: &RunResult) -> DegradationTable {
    let mut table = DegradationTable::default();
    let mut baselines: BTreeMap<CellKey, &MetricReport> = BTreeMap::new();
    for c in clean.cells.iter().filter(|c| c.condition.is_clean()) {
        if c.valid {
            baselines.insert(c.key(), c);
        } else {
            table.warnings.push(format!("clean cell {} is invalid", key_label(&c.key())));
        }
    }
    let mut matched = std::collections::BTreeSet::new();
    for n in &noisy.cells {
        let key = n.key();
        let Some(base) = baselines.get(&key) else {
            table.warnings.push(format!("no clean counterpart for {} ({})", key_label(&key), n.condition_id));
            continue;
        };
        matched.insert(key.clone());
        if !n.valid {
            table.warnings.push(format!("noisy cell {} ({}) is invalid", key_label(&key), n.condition_id));
            continue;
        }
        let clean_vals: BTreeMap<&str, f64> = metric_values(base).into_iter().collect();
        let metrics = metric_values(n)
            .into_iter()
            .filter_map(|(name, noisy)| {
                clean_vals.get(name).map(|&clean| MetricDelta {
                    metric: name.to_string(),
                    clean,
                    noisy,
                    delta: noisy - clean,
                    ratio: (clean != 0.0).then(|| noisy / clean),
                })
            })
            .collect();
        table.rows.push(DegradationRow {
            dataset: n.dataset.clone(),
            condition_id: n.condition_id.clone(),
            model_id: n.model_id.clone(),
            tier: n.tier,
            metrics,
        });
    }
    for key in baselines.keys().filter(|k| !matched.contains(*k)) {
        table.warnings.push(format!("no noisy counterpart for {}", key_label(key)));
    }
    table
}
