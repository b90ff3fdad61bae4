//! Embedding similarity between candidate and reference captions.
//!
//! The builtin embedder counts character 3-grams of `" " + text + " "`,
//! hashes each 3-gram's UTF-8 bytes with 64-bit FNV-1a into 4096 buckets and
//! L2-normalises the counts. Empty text maps to the zero vector. It needs no
//! model and gives the same vector for the same text in every session.
//!
//! The remote embedder speaks `POST {url}/embed` with `{"texts": [...]}` and
//! expects `{"dim": N, "vectors": [[...], ...]}` back.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::stable_mean;
use crate::rng::fnv1a64;

pub const BUILTIN_DIM: usize = 4096;

#[derive(Debug, Error)]
pub enum SimilarityError {
    #[error("embedding dimensions differ: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("embedder returned dimension {got} for texts {start}..{end}, expected {expected}")]
    InconsistentDimension { expected: usize, got: usize, start: usize, end: usize },
    #[error("embedding request for texts {start}..{end} failed: {message}")]
    Remote { start: usize, end: usize, message: String },
    #[error("embedding for text {index} contains a non-finite value")]
    NonFinite { index: usize },
    #[error("invalid embedder `{0}` (expected builtin or http:<url>)")]
    InvalidEmbedder(String),
}

/// Dense embedding with finite entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmbeddingVector(Vec<f64>);

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> Option<Self> {
        values.iter().all(|v| v.is_finite()).then_some(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Cosine similarity; 0 when either vector is zero.
///
/// Computed as `dot / sqrt(|a|^2 |b|^2)`, which is exactly symmetric and gives
/// exactly 1 for `cosine(v, v)`.
pub fn cosine(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64, SimilarityError> {
    if a.dim() != b.dim() {
        return Err(SimilarityError::DimensionMismatch { left: a.dim(), right: b.dim() });
    }
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.0.iter().zip(&b.0) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Ok(0.0);
    }
    Ok((dot / (na * nb).sqrt()).clamp(-1.0, 1.0))
}

pub trait Embedder: Send + Sync {
    /// Stable description recorded in run provenance.
    fn identity(&self) -> String;

    /// One vector per text, in input order.
    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, SimilarityError>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct BuiltinEmbedder;

impl BuiltinEmbedder {
    pub fn embed_one(text: &str) -> EmbeddingVector {
        let mut counts = vec![0.0; BUILTIN_DIM];
        if text.is_empty() {
            return EmbeddingVector(counts);
        }
        let chars: Vec<char> = std::iter::once(' ').chain(text.chars()).chain(std::iter::once(' ')).collect();
        let mut buf = [0u8; 12];
        for w in chars.windows(3) {
            let mut len = 0;
            for c in w {
                len += c.encode_utf8(&mut buf[len..]).len();
            }
            counts[(fnv1a64(&buf[..len]) % BUILTIN_DIM as u64) as usize] += 1.0;
        }
        let norm = counts.iter().map(|v| v * v).sum::<f64>().sqrt();
        counts.iter_mut().for_each(|v| *v /= norm);
        EmbeddingVector(counts)
    }
}

impl Embedder for BuiltinEmbedder {
    fn identity(&self) -> String {
        format!("builtin:char3-fnv1a64-{BUILTIN_DIM}")
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, SimilarityError> {
        Ok(texts.iter().map(|t| Self::embed_one(t)).collect())
    }
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [String],
}

#[derive(Deserialize)]
struct EmbedResponse {
    dim: usize,
    vectors: Vec<Vec<f64>>,
}

/// Client for a `/embed` service, with bounded concurrent batches.
#[derive(Debug, Clone)]
pub struct RemoteEmbedder {
    pub base_url: String,
    pub batch_size: usize,
    pub in_flight: usize,
    pub retries: u32,
    pub timeout: Duration,
    pub backoff: Duration,
}

impl RemoteEmbedder {
    pub fn new(base_url: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into().trim_end_matches('/').to_string(),
            batch_size: 32,
            in_flight: 4,
            retries: 2,
            timeout: Duration::from_secs(60),
            backoff: Duration::from_millis(200),
        }
    }

    fn call(&self, agent: &ureq::Agent, texts: &[String], start: usize) -> Result<EmbedResponse, SimilarityError> {
        let remote = |message: String| SimilarityError::Remote { start, end: start + texts.len(), message };
        let mut attempt = 0;
        loop {
            let result = agent.post(&format!("{}/embed", self.base_url)).send_json(EmbedRequest { texts });
            match result {
                Ok(resp) => {
                    let body: EmbedResponse =
                        resp.into_json().map_err(|e| remote(format!("malformed response: {e}")))?;
                    if body.vectors.len() != texts.len() {
                        return Err(remote(format!("expected {} vectors, got {}", texts.len(), body.vectors.len())));
                    }
                    return Ok(body);
                }
                Err(e) => {
                    let retryable = matches!(&e, ureq::Error::Transport(_) | ureq::Error::Status(500.., _));
                    if !retryable || attempt >= self.retries {
                        return Err(remote(e.to_string()));
                    }
                }
            }
            std::thread::sleep(self.backoff * 2u32.pow(attempt));
            attempt += 1;
        }
    }
}

impl Embedder for RemoteEmbedder {
    fn identity(&self) -> String {
        format!("http:{}", self.base_url)
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, SimilarityError> {
        let agent = ureq::AgentBuilder::new().timeout(self.timeout).build();
        let batches: Vec<(usize, &[String])> =
            texts.chunks(self.batch_size.max(1)).enumerate().map(|(i, c)| (i * self.batch_size.max(1), c)).collect();
        let results: Mutex<Vec<Option<Result<EmbedResponse, SimilarityError>>>> =
            Mutex::new((0..batches.len()).map(|_| None).collect());
        let next = AtomicUsize::new(0);
        std::thread::scope(|scope| {
            for _ in 0..self.in_flight.max(1).min(batches.len()) {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    let Some(&(start, chunk)) = batches.get(i) else { break };
                    let r = self.call(&agent, chunk, start);
                    results.lock().expect("result lock")[i] = Some(r);
                });
            }
        });

        let mut out = Vec::with_capacity(texts.len());
        let mut dim: Option<usize> = None;
        for ((start, chunk), r) in batches.iter().zip(results.into_inner().expect("result lock")) {
            let body = r.expect("every batch ran")?;
            let expected = *dim.get_or_insert(body.dim);
            for v in body.vectors {
                if v.len() != expected || body.dim != expected {
                    return Err(SimilarityError::InconsistentDimension {
                        expected,
                        got: v.len(),
                        start: *start,
                        end: start + chunk.len(),
                    });
                }
                let index = out.len();
                out.push(EmbeddingVector::new(v).ok_or(SimilarityError::NonFinite { index })?);
            }
        }
        Ok(out)
    }
}

/// `builtin` or `http:<url>`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum EmbedderChoice {
    #[default]
    Builtin,
    Http(String),
}

impl EmbedderChoice {
    pub fn build(&self) -> Box<dyn Embedder> {
        match self {
            EmbedderChoice::Builtin => Box::new(BuiltinEmbedder),
            EmbedderChoice::Http(url) => Box::new(RemoteEmbedder::new(url.clone())),
        }
    }
}

impl FromStr for EmbedderChoice {
    type Err = SimilarityError;

    fn from_str(s: &str) -> Result<Self, SimilarityError> {
        match s {
            "builtin" => Ok(EmbedderChoice::Builtin),
            _ => match s.strip_prefix("http:") {
                Some(rest) if !rest.is_empty() => {
                    // Accept both `http:host:port` and `http:http://host:port`.
                    let url = if rest.starts_with("http://") || rest.starts_with("https://") {
                        rest.to_string()
                    } else {
                        format!("http://{}", rest.trim_start_matches('/'))
                    };
                    Ok(EmbedderChoice::Http(url))
                }
                _ => Err(SimilarityError::InvalidEmbedder(s.to_string())),
            },
        }
    }
}

impl TryFrom<String> for EmbedderChoice {
    type Error = SimilarityError;

    fn try_from(s: String) -> Result<Self, SimilarityError> {
        s.parse()
    }
}

impl From<EmbedderChoice> for String {
    fn from(c: EmbedderChoice) -> String {
        c.to_string()
    }
}

impl fmt::Display for EmbedderChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EmbedderChoice::Builtin => f.write_str("builtin"),
            EmbedderChoice::Http(url) => write!(f, "http:{url}"),
        }
    }
}

/// How a sample's reference similarities are reduced to one value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reduction {
    #[default]
    Max,
    Mean,
}

/// Candidate and reference captions as text, ready for embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct TextPair {
    pub sample_id: String,
    pub candidate: String,
    pub references: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityResult {
    pub corpus: f64,
    pub per_sample: Vec<f64>,
}

/// Mean over samples of the reduced candidate/reference cosine. Each
/// distinct text is embedded once.
pub fn similarity_corpus(
    pairs: &[TextPair],
    embedder: &dyn Embedder,
    reduction: Reduction,
) -> Result<SimilarityResult, SimilarityError> {
    let unique: Vec<String> = pairs
        .iter()
        .flat_map(|p| std::iter::once(&p.candidate).chain(&p.references))
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let vectors = embedder.embed(&unique)?;
    let lookup: BTreeMap<&str, &EmbeddingVector> = unique.iter().map(String::as_str).zip(&vectors).collect();
    let mut per_sample = Vec::with_capacity(pairs.len());
    for p in pairs {
        let cand = lookup[p.candidate.as_str()];
        let sims = p.references.iter().map(|r| cosine(cand, lookup[r.as_str()])).collect::<Result<Vec<_>, _>>()?;
        per_sample.push(match reduction {
            Reduction::Max => sims.iter().copied().fold(f64::NEG_INFINITY, f64::max).max(-1.0),
            Reduction::Mean => stable_mean(&sims),
        });
    }
    Ok(SimilarityResult { corpus: stable_mean(&per_sample), per_sample })
}
