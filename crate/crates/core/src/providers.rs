//! Caption sources: pre-generated JSONL files and live `/caption` services.
//!
//! Wire protocol: `POST {endpoint}/caption` with
//! `{"image_b64", "prompt", "temperature", "top_k", "beam_size", "max_tokens"}`
//! (the image is base64 PNG) answered by `{"caption": "..."}`.

use std::collections::HashSet;
use std::fmt;
use std::io::BufRead;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use base64::Engine;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corruptions::Raster;
use crate::datasets::Manifest;

#[derive(Debug, Error)]
pub enum ProviderError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}:{line}: {message}", path.display())]
    Line { path: PathBuf, line: usize, message: String },
    #[error("{}:{line}: duplicate caption for ({sample_id}, {model_id}, {tier}, {condition_id})", path.display())]
    Duplicate {
        path: PathBuf,
        line: usize,
        sample_id: String,
        model_id: String,
        tier: PromptTier,
        condition_id: String,
    },
    #[error("invalid decoding parameter {name}: {message}")]
    InvalidDecoding { name: &'static str, message: String },
    #[error("unknown prompt tier `{0}` (expected basic, descriptive or reasoning)")]
    UnknownTier(String),
    #[error("invalid provider `{0}` (expected file:<path> or http:<url>)")]
    InvalidSource(String),
    #[error("captioning service unreachable at {endpoint}; {} sample(s) missing: {}", missing.len(), missing.join(", "))]
    Unreachable { endpoint: String, missing: Vec<String> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptTier {
    #[default]
    Basic,
    Descriptive,
    Reasoning,
}

impl PromptTier {
    pub const ALL: [PromptTier; 3] = [PromptTier::Basic, PromptTier::Descriptive, PromptTier::Reasoning];

    pub fn template(self) -> &'static str {
        match self {
            PromptTier::Basic => "Describe the image.",
            PromptTier::Descriptive => "List the objects and actions in the image.",
            PromptTier::Reasoning => "What is happening in the image and why?",
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PromptTier::Basic => "basic",
            PromptTier::Descriptive => "descriptive",
            PromptTier::Reasoning => "reasoning",
        }
    }
}

impl fmt::Display for PromptTier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PromptTier {
    type Err = ProviderError;

    fn from_str(s: &str) -> Result<Self, ProviderError> {
        PromptTier::ALL.into_iter().find(|t| t.as_str() == s).ok_or_else(|| ProviderError::UnknownTier(s.to_string()))
    }
}

/// Decoding settings sent with every request and kept fixed for a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecodingParams {
    pub temperature: f64,
    /// 0 disables top-k filtering.
    pub top_k: u32,
    pub beam_size: u32,
    pub max_tokens: u32,
}

impl Default for DecodingParams {
    fn default() -> Self {
        Self { temperature: 0.0, top_k: 0, beam_size: 3, max_tokens: 64 }
    }
}

impl DecodingParams {
    pub fn validate(&self) -> Result<(), ProviderError> {
        let bad = |name, message: &str| Err(ProviderError::InvalidDecoding { name, message: message.to_string() });
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return bad("temperature", "must be a finite value >= 0");
        }
        if self.beam_size < 1 {
            return bad("beam_size", "must be >= 1");
        }
        if self.max_tokens < 1 {
            return bad("max_tokens", "must be >= 1");
        }
        Ok(())
    }
}

/// One generated caption for a (sample, model, tier, condition) cell entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaptionRecord {
    pub sample_id: String,
    pub model_id: String,
    pub prompt_tier: PromptTier,
    pub condition_id: String,
    pub raw: String,
    #[serde(default)]
    pub normalized: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latency_ms: Option<u64>,
}

/// A sample the provider could not caption.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaptionFailure {
    pub sample_id: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CaptionBatch {
    pub records: Vec<CaptionRecord>,
    pub errors: Vec<CaptionFailure>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FileLine {
    sample_id: Option<String>,
    caption: Option<String>,
    prompt_tier: Option<String>,
    condition_id: Option<String>,
    #[serde(default)]
    model_id: Option<String>,
}

/// Reads `{sample_id, caption, [prompt_tier], [condition_id]}` JSON lines.
/// Missing tier defaults to `basic`, missing condition to `clean`.
pub fn captions_from_file(path: &Path, model_id: &str) -> Result<Vec<CaptionRecord>, ProviderError> {
    let file = std::fs::File::open(path).map_err(|e| ProviderError::Io { path: path.to_path_buf(), source: e })?;
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line_no = i + 1;
        let err = |message: String| ProviderError::Line { path: path.to_path_buf(), line: line_no, message };
        let line = line.map_err(|e| err(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: FileLine = serde_json::from_str(&line).map_err(|e| err(e.to_string()))?;
        let sample_id = parsed.sample_id.ok_or_else(|| err("missing field `sample_id`".into()))?;
        let caption = parsed.caption.ok_or_else(|| err("missing field `caption`".into()))?;
        let prompt_tier = match parsed.prompt_tier {
            Some(t) => t.parse().map_err(|e: ProviderError| err(e.to_string()))?,
            None => PromptTier::Basic,
        };
        let condition_id = parsed.condition_id.unwrap_or_else(|| "clean".to_string());
        let model_id = parsed.model_id.unwrap_or_else(|| model_id.to_string());
        if !seen.insert((sample_id.clone(), model_id.clone(), prompt_tier, condition_id.clone())) {
            return Err(ProviderError::Duplicate {
                path: path.to_path_buf(),
                line: line_no,
                sample_id,
                model_id,
                tier: prompt_tier,
                condition_id,
            });
        }
        out.push(CaptionRecord {
            sample_id,
            model_id,
            prompt_tier,
            condition_id,
            raw: caption,
            normalized: String::new(),
            latency_ms: None,
        });
    }
    Ok(out)
}

/// Writes records as the caption JSONL schema read by [`captions_from_file`].
pub fn captions_to_jsonl(records: &[CaptionRecord]) -> String {
    let mut out = String::new();
    for r in records {
        let line = serde_json::json!({
            "sample_id": r.sample_id,
            "caption": r.raw,
            "prompt_tier": r.prompt_tier,
            "condition_id": r.condition_id,
        });
        out.push_str(&line.to_string());
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct CaptionRequest<'a> {
    pub image_b64: String,
    pub prompt: &'a str,
    pub temperature: f64,
    pub top_k: u32,
    pub beam_size: u32,
    pub max_tokens: u32,
}

#[derive(Deserialize)]
struct CaptionResponse {
    caption: String,
}

/// Client for a `/caption` service.
#[derive(Debug, Clone)]
pub struct HttpCaptioner {
    pub endpoint: String,
    pub concurrency: usize,
    pub timeout: Duration,
    pub retries: u32,
    pub backoff: Duration,
}

enum Attempt {
    Ok(String, u64),
    /// Answered, but unusable: recorded against the sample.
    Failed(String),
    /// Never answered.
    Unreachable,
}

impl HttpCaptioner {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into().trim_end_matches('/').to_string(),
            concurrency: 4,
            timeout: Duration::from_secs(60),
            retries: 2,
            backoff: Duration::from_millis(200),
        }
    }

    fn request(&self, agent: &ureq::Agent, body: &CaptionRequest) -> Attempt {
        let url = format!("{}/caption", self.endpoint);
        let mut attempt = 0;
        loop {
            let started = Instant::now();
            let last = match agent.post(&url).send_json(body) {
                Ok(resp) => {
                    return match resp.into_json::<CaptionResponse>() {
                        Ok(r) => Attempt::Ok(r.caption, started.elapsed().as_millis() as u64),
                        Err(e) => Attempt::Failed(format!("malformed response: {e}")),
                    }
                }
                Err(ureq::Error::Status(code, resp)) => {
                    let text = resp.into_string().unwrap_or_default();
                    let message = format!("HTTP {code}: {}", text.chars().take(200).collect::<String>());
                    // Client errors will not improve on retry.
                    if code < 500 {
                        return Attempt::Failed(message);
                    }
                    Attempt::Failed(message)
                }
                Err(ureq::Error::Transport(_)) => Attempt::Unreachable,
            };
            if attempt >= self.retries {
                return last;
            }
            std::thread::sleep(self.backoff * 2u32.pow(attempt));
            attempt += 1;
        }
    }

    /// Captions every manifest image (or the supplied image bytes per
    /// sample). Output order follows the manifest. Samples the service
    /// answered badly become [`CaptionFailure`]s; if any sample never got an
    /// answer the whole call fails with the list of missing samples.
    pub fn caption_manifest(
        &self,
        manifest: &Manifest,
        images: &(dyn Fn(usize) -> std::io::Result<Vec<u8>> + Sync),
        tier: PromptTier,
        decoding: &DecodingParams,
        model_id: &str,
        condition_id: &str,
    ) -> Result<CaptionBatch, ProviderError> {
        decoding.validate()?;
        let agent = ureq::AgentBuilder::new().timeout(self.timeout).build();
        let n = manifest.samples.len();
        let results: Mutex<Vec<Option<Attempt>>> = Mutex::new((0..n).map(|_| None).collect());
        let next = AtomicUsize::new(0);
        std::thread::scope(|scope| {
            for _ in 0..self.concurrency.max(1).min(n) {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    if i >= n {
                        break;
                    }
                    let attempt = match images(i).map_err(|e| e.to_string()).and_then(|b| png_base64(&b)) {
                        Ok(image_b64) => {
                            let body = CaptionRequest {
                                image_b64,
                                prompt: tier.template(),
                                temperature: decoding.temperature,
                                top_k: decoding.top_k,
                                beam_size: decoding.beam_size,
                                max_tokens: decoding.max_tokens,
                            };
                            self.request(&agent, &body)
                        }
                        Err(e) => Attempt::Failed(format!("image unreadable: {e}")),
                    };
                    results.lock().expect("result lock")[i] = Some(attempt);
                });
            }
        });

        let mut batch = CaptionBatch::default();
        let mut missing = Vec::new();
        for (sample, attempt) in manifest.samples.iter().zip(results.into_inner().expect("result lock")) {
            match attempt.expect("every sample ran") {
                Attempt::Ok(raw, ms) => batch.records.push(CaptionRecord {
                    sample_id: sample.sample_id.clone(),
                    model_id: model_id.to_string(),
                    prompt_tier: tier,
                    condition_id: condition_id.to_string(),
                    raw,
                    normalized: String::new(),
                    latency_ms: Some(ms),
                }),
                Attempt::Failed(message) => {
                    batch.errors.push(CaptionFailure { sample_id: sample.sample_id.clone(), message })
                }
                Attempt::Unreachable => missing.push(sample.sample_id.clone()),
            }
        }
        if !missing.is_empty() {
            return Err(ProviderError::Unreachable { endpoint: self.endpoint.clone(), missing });
        }
        Ok(batch)
    }
}

/// Base64 PNG of an encoded image. Every input is decoded first, so a
/// corrupt file fails here instead of at the service; PNG bytes are then sent
/// unchanged and anything else is re-encoded.
fn png_base64(bytes: &[u8]) -> Result<String, String> {
    const PNG_MAGIC: &[u8] = b"\x89PNG\r\n\x1a\n";
    let engine = base64::engine::general_purpose::STANDARD;
    let raster = Raster::decode(bytes).map_err(|e| e.to_string())?;
    if bytes.starts_with(PNG_MAGIC) {
        return Ok(engine.encode(bytes));
    }
    Ok(engine.encode(raster.to_png()))
}

/// Captions a manifest's own images over HTTP.
pub fn captions_from_http(
    endpoint: &str,
    manifest: &Manifest,
    tier: PromptTier,
    decoding: &DecodingParams,
    model_id: &str,
) -> Result<CaptionBatch, ProviderError> {
    let read = |i: usize| std::fs::read(manifest.image_path(&manifest.samples[i]));
    HttpCaptioner::new(endpoint).caption_manifest(manifest, &read, tier, decoding, model_id, "clean")
}

/// Model ids a caption service reports on `GET /health`.
pub fn service_health(endpoint: &str) -> Result<Vec<String>, ProviderError> {
    let endpoint = endpoint.trim_end_matches('/');
    let unreachable = || ProviderError::Unreachable { endpoint: endpoint.to_string(), missing: Vec::new() };
    let resp =
        ureq::get(&format!("{endpoint}/health")).timeout(Duration::from_secs(10)).call().map_err(|_| unreachable())?;
    resp.into_json::<Vec<String>>()
        .map_err(|e| ProviderError::InvalidSource(format!("{endpoint}/health: malformed response: {e}")))
}

/// `file:<path>` or `http:<url>`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ProviderSource {
    File(String),
    Http(String),
}

impl FromStr for ProviderSource {
    type Err = ProviderError;

    fn from_str(s: &str) -> Result<Self, ProviderError> {
        if let Some(p) = s.strip_prefix("file:").filter(|p| !p.is_empty()) {
            return Ok(ProviderSource::File(p.to_string()));
        }
        if let Some(rest) = s.strip_prefix("http:").filter(|r| !r.is_empty()) {
            let url = if rest.starts_with("http://") || rest.starts_with("https://") {
                rest.to_string()
            } else {
                format!("http://{}", rest.trim_start_matches('/'))
            };
            return Ok(ProviderSource::Http(url));
        }
        Err(ProviderError::InvalidSource(s.to_string()))
    }
}

impl TryFrom<String> for ProviderSource {
    type Error = ProviderError;

    fn try_from(s: String) -> Result<Self, ProviderError> {
        s.parse()
    }
}

impl From<ProviderSource> for String {
    fn from(s: ProviderSource) -> String {
        s.to_string()
    }
}

impl fmt::Display for ProviderSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProviderSource::File(p) => write!(f, "file:{p}"),
            ProviderSource::Http(u) => write!(f, "http:{u}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        std::io::Write::write_all(&mut f, content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn templates_are_exact() {
        assert_eq!(PromptTier::Basic.template(), "Describe the image.");
        assert_eq!(PromptTier::Descriptive.template(), "List the objects and actions in the image.");
        assert_eq!(PromptTier::Reasoning.template(), "What is happening in the image and why?");
        assert_eq!("reasoning".parse::<PromptTier>().unwrap(), PromptTier::Reasoning);
        assert!("fancy".parse::<PromptTier>().is_err());
    }

    #[test]
    fn file_defaults_and_explicit_fields() {
        let f = write(
            "{\"sample_id\":\"a\",\"caption\":\"a dog\"}\n\n{\"sample_id\":\"b\",\"caption\":\"x\",\"condition_id\":\"gaussian_noise/high\",\"prompt_tier\":\"reasoning\"}\n",
        );
        let recs = captions_from_file(f.path(), "m").unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!((recs[0].prompt_tier, recs[0].condition_id.as_str()), (PromptTier::Basic, "clean"));
        assert_eq!(recs[1].condition_id, "gaussian_noise/high");
        assert_eq!(recs[1].prompt_tier, PromptTier::Reasoning);
        assert_eq!(recs[1].model_id, "m");
    }

    #[test]
    fn file_errors_name_the_line() {
        let f = write("{\"sample_id\":\"a\",\"caption\":\"x\"}\n{\"sample_id\":\"b\"}\n");
        let e = captions_from_file(f.path(), "m").unwrap_err();
        assert!(matches!(e, ProviderError::Line { line: 2, .. }), "{e}");
        assert!(e.to_string().contains("caption"));

        let f = write("{\"sample_id\":\"a\",\"caption\":\"x\"}\n{\"sample_id\":\"a\",\"caption\":\"y\"}\n");
        assert!(matches!(captions_from_file(f.path(), "m"), Err(ProviderError::Duplicate { line: 2, .. })));

        let f = write("not json\n");
        assert!(matches!(captions_from_file(f.path(), "m"), Err(ProviderError::Line { line: 1, .. })));
    }

    #[test]
    fn jsonl_round_trip() {
        let f = write("{\"sample_id\":\"a\",\"caption\":\"a dog\",\"condition_id\":\"snow/low\"}\n");
        let recs = captions_from_file(f.path(), "m").unwrap();
        let g = write(&captions_to_jsonl(&recs));
        assert_eq!(captions_from_file(g.path(), "m").unwrap(), recs);
    }

    #[test]
    fn decoding_validation() {
        assert!(DecodingParams::default().validate().is_ok());
        assert!(DecodingParams { beam_size: 0, ..Default::default() }.validate().is_err());
        assert!(DecodingParams { temperature: -1.0, ..Default::default() }.validate().is_err());
        assert!(DecodingParams { max_tokens: 0, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn source_parsing() {
        assert_eq!("file:caps.jsonl".parse::<ProviderSource>().unwrap(), ProviderSource::File("caps.jsonl".into()));
        assert_eq!(
            "http:127.0.0.1:9".parse::<ProviderSource>().unwrap(),
            ProviderSource::Http("http://127.0.0.1:9".into())
        );
        assert!("ftp:x".parse::<ProviderSource>().is_err());
    }

    #[test]
    fn non_png_is_reencoded() {
        let r = Raster::filled(4, 4, [10, 20, 30]).unwrap();
        let png = r.to_png();
        let b64 = png_base64(&png).unwrap();
        let decoded = base64::engine::general_purpose::STANDARD.decode(b64).unwrap();
        assert_eq!(decoded, png);
        assert!(png_base64(b"garbage").is_err());
    }
}
