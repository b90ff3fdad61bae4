//! METEOR with the original parameterisation: `F = 10PR / (R + 9P)`,
//! `penalty = 0.5 (chunks / m)^3`, `score = F (1 - penalty)`.
//!
//! Unigrams are aligned in three stages (exact, Porter/Snowball stem,
//! synonym table): the alignment has as many exact links as possible, then
//! as many stem links, then synonym links, and the fewest chunks among those.

use std::collections::HashMap;
use std::path::Path;
use std::sync::LazyLock;

use rust_stemmers::{Algorithm, Stemmer};

use super::{EvalPair, MetricError, Tokens};

const ALPHA_WEIGHT: f64 = 9.0;
const PENALTY_GAMMA: f64 = 0.5;
const PENALTY_BETA: i32 = 3;
/// Search-node budget for chunk minimisation; beyond it the best alignment
/// found so far is kept.
const SEARCH_BUDGET: usize = 200_000;

static STEMMER: LazyLock<Stemmer> = LazyLock::new(|| Stemmer::create(Algorithm::English));

pub fn stem(word: &str) -> String {
    STEMMER.stem(word).into_owned()
}

/// Synonym sets, one per line of the resource file (words separated by
/// whitespace or commas, `#` starts a comment).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SynonymTable {
    sets: HashMap<String, Vec<usize>>,
}

impl SynonymTable {
    pub fn parse(text: &str) -> Self {
        let mut sets: HashMap<String, Vec<usize>> = HashMap::new();
        let lines = text.lines().map(|l| l.split('#').next().unwrap_or("")).filter(|l| !l.trim().is_empty());
        for (id, line) in lines.enumerate() {
            for w in line.split(|c: char| c == ',' || c.is_whitespace()).filter(|w| !w.is_empty()) {
                let entry = sets.entry(w.to_lowercase()).or_default();
                if !entry.contains(&id) {
                    entry.push(id);
                }
            }
        }
        Self { sets }
    }

    pub fn load(path: &Path) -> Result<Self, MetricError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| MetricError::Io { path: path.to_path_buf(), source: e })?;
        Ok(Self::parse(&text))
    }

    pub fn are_synonyms(&self, a: &str, b: &str) -> bool {
        match (self.sets.get(a), self.sets.get(b)) {
            (Some(x), Some(y)) => x.iter().any(|id| y.contains(id)),
            _ => false,
        }
    }
}

/// Detailed METEOR result for one candidate/reference pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeteorDetail {
    pub matches: usize,
    pub chunks: usize,
    pub precision: f64,
    pub recall: f64,
    pub fmean: f64,
    pub penalty: f64,
    pub score: f64,
}

/// Counts chunks in an alignment given as `cand index -> ref index`.
pub(crate) fn count_chunks(alignment: &[Option<usize>]) -> usize {
    let mut chunks = 0;
    let mut prev: Option<usize> = None;
    for a in alignment {
        match (*a, prev) {
            (Some(j), Some(p)) if j == p + 1 => {}
            (Some(_), _) => chunks += 1,
            _ => {}
        }
        prev = *a;
    }
    chunks
}

/// Maximum-weight assignment of rows to columns (`rows <= cols`), by the
/// Hungarian method on negated weights. Returns the column of every row.
fn max_weight_assignment(weights: &[Vec<i64>]) -> Vec<usize> {
    let n = weights.len();
    let m = weights.first().map_or(0, Vec::len);
    debug_assert!(n <= m);
    let cost = |i: usize, j: usize| -weights[i - 1][j - 1];
    let (mut u, mut v) = (vec![0i64; n + 1], vec![0i64; m + 1]);
    let (mut p, mut way) = (vec![0usize; m + 1], vec![0usize; m + 1]);
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![i64::MAX; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let (mut delta, mut j1) = (i64::MAX, 0);
            for j in 1..=m {
                if !used[j] {
                    let cur = cost(i0, j) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out = vec![0; n];
    for j in 1..=m {
        if p[j] != 0 {
            out[p[j] - 1] = j - 1;
        }
    }
    out
}

/// Depth-first search for an alignment of weight `target` with fewer chunks
/// than the incumbent.
struct ChunkSearch<'a> {
    /// Per candidate position: `(ref index, weight)`.
    options: &'a [Vec<(usize, i64)>],
    /// bound[i]: the most weight positions >= i could still add.
    bound: Vec<i64>,
    target: i64,
    used: Vec<bool>,
    current: Vec<Option<usize>>,
    best_chunks: usize,
    best: Vec<Option<usize>>,
    nodes: usize,
}

impl ChunkSearch<'_> {
    fn run(&mut self, pos: usize, prev: Option<usize>, chunks: usize, weight: i64) {
        self.nodes += 1;
        if self.nodes > SEARCH_BUDGET || chunks >= self.best_chunks || weight + self.bound[pos] < self.target {
            return;
        }
        if pos == self.current.len() {
            self.best_chunks = chunks;
            self.best.clone_from(&self.current);
            return;
        }
        let starts_chunk = |j: usize| usize::from(!prev.is_some_and(|p| j == p + 1));
        // Continuing the current chunk and strong matches first find good
        // alignments early.
        let mut order: Vec<(usize, i64)> = self.options[pos].iter().copied().filter(|&(j, _)| !self.used[j]).collect();
        order.sort_by_key(|&(j, w)| (starts_chunk(j), -w, j));
        for (j, w) in order {
            self.used[j] = true;
            self.current[pos] = Some(j);
            self.run(pos + 1, Some(j), chunks + starts_chunk(j), weight + w);
            self.used[j] = false;
        }
        self.current[pos] = None;
        self.run(pos + 1, None, chunks, weight);
    }
}

/// Staged unigram alignment; returns `cand index -> ref index`.
///
/// A word pair links at the first stage under which it matches. The
/// alignment maximises exact links, then stem links, then synonym links,
/// and among those has the fewest chunks. Maximising stage by stage this way
/// settles the ties a greedy stage-at-a-time search would leave open.
pub fn align(cand: &[String], refr: &[String], synonyms: Option<&SynonymTable>) -> Vec<Option<usize>> {
    let (c, r) = (cand.len(), refr.len());
    if c == 0 || r == 0 {
        return vec![None; c];
    }
    let cand_stems: Vec<String> = cand.iter().map(|w| stem(w)).collect();
    let ref_stems: Vec<String> = refr.iter().map(|w| stem(w)).collect();
    // Link weights W^2, W, 1 with W above any possible link count make the
    // weight order lexicographic in (exact, stem, synonym) counts.
    let big = c.min(r) as i64 + 1;
    let link = |i: usize, j: usize| -> i64 {
        if cand[i] == refr[j] {
            big * big
        } else if cand_stems[i] == ref_stems[j] {
            big
        } else if synonyms.is_some_and(|t| t.are_synonyms(&cand[i], &refr[j])) {
            1
        } else {
            0
        }
    };
    let weights: Vec<Vec<i64>> =
        (0..c).map(|i| (0..r).map(|j| link(i, j)).chain((0..c).map(|_| 0)).collect()).collect();
    let assigned = max_weight_assignment(&weights);
    let start: Vec<Option<usize>> =
        assigned.iter().enumerate().map(|(i, &j)| (j < r && weights[i][j] > 0).then_some(j)).collect();
    let target: i64 = start.iter().enumerate().filter_map(|(i, j)| j.map(|j| weights[i][j])).sum();
    if target == 0 {
        return start;
    }

    let options: Vec<Vec<(usize, i64)>> =
        (0..c).map(|i| (0..r).filter(|&j| weights[i][j] > 0).map(|j| (j, weights[i][j])).collect()).collect();
    let mut bound = vec![0; c + 1];
    for i in (0..c).rev() {
        bound[i] = bound[i + 1] + options[i].iter().map(|o| o.1).max().unwrap_or(0);
    }
    let mut search = ChunkSearch {
        options: &options,
        bound,
        target,
        used: vec![false; r],
        current: vec![None; c],
        best_chunks: count_chunks(&start),
        best: start,
        nodes: 0,
    };
    search.run(0, None, 0, 0);
    search.best
}

fn score_from(matches: usize, chunks: usize, cand_len: usize, ref_len: usize) -> MeteorDetail {
    if matches == 0 {
        return MeteorDetail { matches, chunks, precision: 0.0, recall: 0.0, fmean: 0.0, penalty: 0.0, score: 0.0 };
    }
    let m = matches as f64;
    let precision = m / cand_len as f64;
    let recall = m / ref_len as f64;
    let fmean = (1.0 + ALPHA_WEIGHT) * precision * recall / (recall + ALPHA_WEIGHT * precision);
    let penalty = PENALTY_GAMMA * (chunks as f64 / m).powi(PENALTY_BETA);
    MeteorDetail { matches, chunks, precision, recall, fmean, penalty, score: fmean * (1.0 - penalty) }
}

pub fn meteor_single(cand: &Tokens, refr: &Tokens, synonyms: Option<&SynonymTable>) -> MeteorDetail {
    let alignment = align(cand, refr, synonyms);
    let matches = alignment.iter().flatten().count();
    score_from(matches, count_chunks(&alignment), cand.len(), refr.len())
}

/// Best score over the pair's references.
pub fn meteor(pair: &EvalPair, synonyms: Option<&SynonymTable>) -> f64 {
    pair.references.iter().map(|r| meteor_single(&pair.candidate, r, synonyms).score).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::tokenize;

    fn m(c: &str, r: &str) -> MeteorDetail {
        meteor_single(&tokenize(c), &tokenize(r), None)
    }

    #[test]
    fn identity_has_one_chunk() {
        let d = m("a b c", "a b c");
        assert_eq!((d.matches, d.chunks), (3, 1));
        assert!((d.score - (1.0 - 1.0 / 54.0)).abs() < 1e-12);
    }

    #[test]
    fn reordering_is_penalised() {
        let d = m("the cat sat", "the sat cat");
        assert_eq!((d.matches, d.chunks), (3, 3));
        assert!((d.score - 0.5).abs() < 1e-12);
    }

    #[test]
    fn no_overlap_is_zero() {
        assert_eq!(m("red car", "blue boat").score, 0.0);
        assert_eq!(m("", "blue boat").score, 0.0);
    }

    #[test]
    fn stems_match_in_second_stage() {
        let d = m("dogs running", "dog runs");
        assert_eq!(d.matches, 2);
    }

    #[test]
    fn synonyms_match_in_third_stage() {
        let table = SynonymTable::parse("# colours\nsofa, couch\nbig large\n");
        let d = meteor_single(&tokenize("a couch"), &tokenize("a sofa"), Some(&table));
        assert_eq!((d.matches, d.chunks), (2, 1));
        assert_eq!(meteor_single(&tokenize("a couch"), &tokenize("a sofa"), None).matches, 1);
        assert!(table.are_synonyms("big", "large"));
        assert!(!table.are_synonyms("big", "sofa"));
    }

    #[test]
    fn duplicate_words_choose_fewest_chunks() {
        // Aligning the first "a" to the second reference "a" would split the chunk.
        let d = m("a dog on a mat", "a cat and a dog on a mat");
        assert_eq!(d.matches, 5);
        assert_eq!(d.chunks, 1);
    }

    #[test]
    fn chunk_counting() {
        assert_eq!(count_chunks(&[Some(0), Some(1), None, Some(2)]), 2);
        assert_eq!(count_chunks(&[Some(2), Some(0), Some(1)]), 2);
        assert_eq!(count_chunks(&[]), 0);
    }

    #[test]
    fn assignment_maximises_weight() {
        assert_eq!(max_weight_assignment(&[vec![3, 2], vec![3, 0]]), vec![1, 0]);
        assert_eq!(max_weight_assignment(&[vec![0, 5, 1]]), vec![1]);
    }

    #[test]
    fn exact_tie_is_settled_by_later_stages() {
        // Either "soccer" can take the exact link; only the first lets the
        // stemmed "playing" join it in one chunk.
        let d = m("children kids playing soccer soccer field", "children play soccer on a grassy field");
        assert_eq!((d.matches, d.chunks), (4, 3));
    }
}
