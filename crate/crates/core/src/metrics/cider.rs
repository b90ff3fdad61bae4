//! CIDEr consensus scoring over n = 1..4.
//!
//! Document frequency counts samples (not references) whose reference set
//! contains an n-gram; `idf = ln(N / max(1, df))` with `N` the number of
//! pairs in the corpus. Term frequencies are raw counts.
//!
//! * `plain`: cosine of the TF-IDF vectors, averaged over references and n.
//! * `d`: candidate weights clipped to the reference weights, a length
//!   penalty `exp(-(|c| - |r|)^2 / (2 * 6^2))`, and a x10 scale.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{stable_mean, EvalPair, MetricError};

pub const MAX_N: usize = 4;
pub const SIGMA: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CiderVariant {
    Plain,
    #[default]
    D,
}

impl fmt::Display for CiderVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CiderVariant::Plain => "plain",
            CiderVariant::D => "d",
        })
    }
}

impl FromStr for CiderVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "plain" | "cider" => Ok(CiderVariant::Plain),
            "d" | "cider-d" | "cider_d" => Ok(CiderVariant::D),
            other => Err(format!("unknown CIDEr variant `{other}` (expected plain or d)")),
        }
    }
}

type Gram<'a> = &'a [String];

struct Weighted<'a> {
    /// Per order: n-gram weights, ordered so float sums are reproducible.
    vecs: [BTreeMap<Gram<'a>, f64>; MAX_N],
    norms: [f64; MAX_N],
    len: usize,
}

fn counts(words: &[String], n: usize) -> BTreeMap<Gram<'_>, u32> {
    let mut out = BTreeMap::new();
    if words.len() >= n {
        for w in words.windows(n) {
            *out.entry(w).or_insert(0) += 1;
        }
    }
    out
}

fn weigh<'a>(words: &'a [String], df: &HashMap<Gram<'a>, u32>, log_n: f64) -> Weighted<'a> {
    let mut vecs: [BTreeMap<Gram<'a>, f64>; MAX_N] = Default::default();
    let mut norms = [0.0; MAX_N];
    for n in 1..=MAX_N {
        for (g, tf) in counts(words, n) {
            let d = df.get(g).copied().unwrap_or(0).max(1) as f64;
            vecs[n - 1].insert(g, tf as f64 * (log_n - d.ln()));
        }
        norms[n - 1] = vecs[n - 1].values().map(|v| v * v).sum::<f64>().sqrt();
    }
    Weighted { vecs, norms, len: words.len() }
}

fn similarity(c: &Weighted, r: &Weighted, n: usize, variant: CiderVariant) -> f64 {
    let (vc, vr) = (&c.vecs[n], &r.vecs[n]);
    let denom = c.norms[n] * r.norms[n];
    if denom == 0.0 {
        return 0.0;
    }
    match variant {
        CiderVariant::Plain => {
            let dot: f64 = vc.iter().filter_map(|(g, a)| vr.get(g).map(|b| a * b)).sum();
            dot / denom
        }
        CiderVariant::D => {
            let dot: f64 = vc.iter().filter_map(|(g, a)| vr.get(g).map(|b| a.min(*b) * b)).sum();
            let delta = c.len as f64 - r.len as f64;
            dot / denom * (-(delta * delta) / (2.0 * SIGMA * SIGMA)).exp()
        }
    }
}

/// Per-pair CIDEr values, in input order.
pub fn cider_per_pair(pairs: &[EvalPair], variant: CiderVariant) -> Result<Vec<f64>, MetricError> {
    if pairs.is_empty() {
        return Err(MetricError::EmptyCorpus);
    }
    let mut df: HashMap<Gram, u32> = HashMap::new();
    for p in pairs {
        let mut seen: HashSet<Gram> = HashSet::new();
        for r in &p.references {
            for n in 1..=MAX_N {
                if r.len() >= n {
                    seen.extend(r.windows(n));
                }
            }
        }
        for g in seen {
            *df.entry(g).or_insert(0) += 1;
        }
    }
    let log_n = (pairs.len() as f64).ln();
    let scale = match variant {
        CiderVariant::Plain => 1.0,
        CiderVariant::D => 10.0,
    };
    Ok(pairs
        .par_iter()
        .map(|p| {
            let cand = weigh(&p.candidate, &df, log_n);
            let mut total = 0.0;
            for n in 0..MAX_N {
                let mut per_ref = 0.0;
                for r in &p.references {
                    per_ref += similarity(&cand, &weigh(r, &df, log_n), n, variant);
                }
                total += per_ref / p.references.len() as f64;
            }
            scale * total / MAX_N as f64
        })
        .collect())
}

/// Corpus CIDEr: mean of the per-pair values.
pub fn cider(pairs: &[EvalPair], variant: CiderVariant) -> Result<f64, MetricError> {
    Ok(stable_mean(&cider_per_pair(pairs, variant)?))
}
