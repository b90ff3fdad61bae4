//! Slow, direct transcriptions of the metric definitions. Nothing here is
//! shared with the library except the tokenizer output, the stemmer and the
//! synonym table, which are inputs to the metrics rather than part of them.

use std::collections::{HashMap, HashSet};

use capharness::metrics::{stem, EvalPair, SynonymTable};

fn words(t: &[String]) -> Vec<&str> {
    t.iter().map(String::as_str).collect()
}

/// n-grams as space-joined strings.
fn ngrams(w: &[&str], n: usize) -> Vec<String> {
    if w.len() < n {
        return Vec::new();
    }
    (0..=w.len() - n).map(|i| w[i..i + n].join(" ")).collect()
}

fn count(grams: Vec<String>) -> HashMap<String, usize> {
    let mut m = HashMap::new();
    for g in grams {
        *m.entry(g).or_insert(0) += 1;
    }
    m
}

pub struct OracleBleu {
    pub scores: [f64; 4],
    pub testlen: usize,
    pub reflen: usize,
}

/// Corpus BLEU from pooled clipped counts, closest reference length with
/// ties going to the shorter one, no smoothing.
pub fn bleu(pairs: &[EvalPair]) -> OracleBleu {
    let mut matched = [0usize; 4];
    let mut total = [0usize; 4];
    let (mut c, mut r) = (0usize, 0usize);
    for p in pairs {
        let cand = words(&p.candidate);
        let refs: Vec<Vec<&str>> = p.references.iter().map(|t| words(t)).collect();
        c += cand.len();
        let mut best = refs[0].len();
        for rf in &refs {
            let (d, bd) = (rf.len().abs_diff(cand.len()), best.abs_diff(cand.len()));
            if d < bd || (d == bd && rf.len() < best) {
                best = rf.len();
            }
        }
        r += best;
        for n in 1..=4 {
            let cc = count(ngrams(&cand, n));
            for (g, k) in &cc {
                let max_ref = refs.iter().map(|rf| ngrams(rf, n).iter().filter(|x| *x == g).count()).max().unwrap();
                matched[n - 1] += (*k).min(max_ref);
            }
            total[n - 1] += cand.len().saturating_sub(n - 1);
        }
    }
    let bp = if c > r { 1.0 } else { (1.0 - r as f64 / c as f64).exp() };
    let mut scores = [0.0; 4];
    for k in 1..=4 {
        let ps: Vec<f64> = (0..k).map(|i| matched[i] as f64 / total[i] as f64).collect();
        scores[k - 1] = if ps.iter().any(|&p| p == 0.0 || p.is_nan()) {
            0.0
        } else {
            bp * (ps.iter().map(|p| p.ln()).sum::<f64>() / k as f64).exp()
        };
    }
    OracleBleu { scores, testlen: c, reflen: r }
}

/// LCS by memoised recursion.
pub fn lcs(a: &[&str], b: &[&str]) -> usize {
    fn go(i: usize, j: usize, a: &[&str], b: &[&str], memo: &mut HashMap<(usize, usize), usize>) -> usize {
        if i == a.len() || j == b.len() {
            return 0;
        }
        if let Some(&v) = memo.get(&(i, j)) {
            return v;
        }
        let v = if a[i] == b[j] {
            1 + go(i + 1, j + 1, a, b, memo)
        } else {
            go(i + 1, j, a, b, memo).max(go(i, j + 1, a, b, memo))
        };
        memo.insert((i, j), v);
        v
    }
    go(0, 0, a, b, &mut HashMap::new())
}

pub fn rouge_l(p: &EvalPair) -> f64 {
    let cand = words(&p.candidate);
    let beta2 = 1.2f64 * 1.2;
    p.references
        .iter()
        .map(|rf| {
            let rf = words(rf);
            let l = lcs(&cand, &rf) as f64;
            if l == 0.0 {
                return 0.0;
            }
            let (prec, rec) = (l / cand.len() as f64, l / rf.len() as f64);
            (1.0 + beta2) * prec * rec / (rec + beta2 * prec)
        })
        .fold(0.0, f64::max)
}

fn chunks(al: &[Option<usize>]) -> usize {
    let mut n = 0;
    for i in 0..al.len() {
        if let Some(j) = al[i] {
            let continues = i > 0 && j > 0 && al[i - 1] == Some(j - 1);
            if !continues {
                n += 1;
            }
        }
    }
    n
}

/// Every partial one-to-one alignment using allowed links.
fn all_alignments(
    i: usize,
    al: &mut Vec<Option<usize>>,
    used: &mut Vec<bool>,
    ok: &dyn Fn(usize, usize) -> bool,
    out: &mut Vec<Vec<Option<usize>>>,
) {
    if i == al.len() {
        out.push(al.clone());
        return;
    }
    all_alignments(i + 1, al, used, ok, out);
    for j in 0..used.len() {
        if !used[j] && ok(i, j) {
            used[j] = true;
            al[i] = Some(j);
            all_alignments(i + 1, al, used, ok, out);
            al[i] = None;
            used[j] = false;
        }
    }
}

/// METEOR by enumerating every alignment. A link belongs to the first stage
/// (exact, stem, synonym) under which its words match; the chosen alignment
/// has the most exact links, then stem links, then synonym links, then the
/// fewest chunks.
pub fn meteor_pair(cand: &[String], rf: &[String], syn: Option<&SynonymTable>) -> f64 {
    let stage = |i: usize, j: usize| -> Option<usize> {
        if cand[i] == rf[j] {
            Some(0)
        } else if stem(&cand[i]) == stem(&rf[j]) {
            Some(1)
        } else if syn.is_some_and(|t| t.are_synonyms(&cand[i], &rf[j])) {
            Some(2)
        } else {
            None
        }
    };
    let mut all = Vec::new();
    all_alignments(0, &mut vec![None; cand.len()], &mut vec![false; rf.len()], &|i, j| stage(i, j).is_some(), &mut all);
    let key = |al: &Vec<Option<usize>>| {
        let mut per_stage = [0usize; 3];
        for (i, j) in al.iter().enumerate() {
            if let Some(j) = j {
                per_stage[stage(i, *j).unwrap()] += 1;
            }
        }
        (per_stage, std::cmp::Reverse(chunks(al)))
    };
    let best = all.iter().max_by_key(|al| key(al)).unwrap();
    let m = best.iter().flatten().count() as f64;
    if m == 0.0 {
        return 0.0;
    }
    let (p, r) = (m / cand.len() as f64, m / rf.len() as f64);
    let f = 10.0 * p * r / (r + 9.0 * p);
    f * (1.0 - 0.5 * (chunks(best) as f64 / m).powi(3))
}

/// Corpus METEOR: mean over pairs of the best reference.
pub fn meteor(pairs: &[EvalPair], syn: Option<&SynonymTable>) -> f64 {
    let total: f64 =
        pairs.iter().map(|p| p.references.iter().map(|r| meteor_pair(&p.candidate, r, syn)).fold(0.0, f64::max)).sum();
    total / pairs.len() as f64
}

/// CIDEr over string-keyed TF-IDF vectors. `d` selects clipping, the
/// Gaussian length penalty (sigma 6) and the x10 scale.
pub fn cider(pairs: &[EvalPair], d: bool) -> f64 {
    let n_docs = pairs.len() as f64;
    let mut df: HashMap<String, f64> = HashMap::new();
    for p in pairs {
        let mut doc: HashSet<String> = HashSet::new();
        for r in &p.references {
            for n in 1..=4 {
                doc.extend(ngrams(&words(r), n));
            }
        }
        for g in doc {
            *df.entry(g).or_insert(0.0) += 1.0;
        }
    }
    let vec = |t: &[String], n: usize| -> HashMap<String, f64> {
        count(ngrams(&words(t), n))
            .into_iter()
            .map(|(g, k)| {
                let idf = (n_docs / df.get(&g).copied().unwrap_or(0.0).max(1.0)).ln();
                (g, k as f64 * idf)
            })
            .collect()
    };
    let norm = |v: &HashMap<String, f64>| v.values().map(|x| x * x).sum::<f64>().sqrt();
    let mut total = 0.0;
    for p in pairs {
        let mut per_n = 0.0;
        for n in 1..=4 {
            let vc = vec(&p.candidate, n);
            let mut s = 0.0;
            for r in &p.references {
                let vr = vec(r, n);
                let den = norm(&vc) * norm(&vr);
                if den == 0.0 {
                    continue;
                }
                let mut dot = 0.0;
                for (g, a) in &vc {
                    if let Some(b) = vr.get(g) {
                        dot += if d { a.min(*b) * b } else { a * b };
                    }
                }
                let mut sim = dot / den;
                if d {
                    let delta = p.candidate.len() as f64 - r.len() as f64;
                    sim *= (-delta * delta / 72.0).exp();
                }
                s += sim;
            }
            per_n += s / p.references.len() as f64;
        }
        total += per_n / 4.0 * if d { 10.0 } else { 1.0 };
    }
    total / n_docs
}

/// Hashed character-trigram embedding kept as a sparse map.
pub fn embed(text: &str) -> HashMap<u64, f64> {
    let mut m = HashMap::new();
    if text.is_empty() {
        return m;
    }
    let padded: Vec<char> = format!(" {text} ").chars().collect();
    for i in 0..padded.len() - 2 {
        let gram: String = padded[i..i + 3].iter().collect();
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in gram.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        *m.entry(h % 4096).or_insert(0.0) += 1.0;
    }
    m
}

pub fn cosine(a: &HashMap<u64, f64>, b: &HashMap<u64, f64>) -> f64 {
    let dot: f64 = a.iter().filter_map(|(k, x)| b.get(k).map(|y| x * y)).sum();
    let na = a.values().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.values().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}
