//! Cleanup of raw model captions before scoring.
//!
//! Stages, in order:
//! 1. strip markdown headers (`#`..`######` at line start) and emphasis
//!    markers (`*`, `_`, backticks), keeping a leading `* ` bullet for stage 2;
//! 2. remove numbered/bulleted list prefixes `^\s*(\d+[.)]|[-*•])\s+` on each
//!    line, then flatten newlines to spaces;
//! 3. drop every character that is not a letter, digit, space, comma or period
//!    (other whitespace becomes a space);
//! 4. collapse whitespace runs;
//! 5. trim both ends, plus any commas/periods left dangling at the start;
//! 6. lowercase (configurable).
//!
//! The pipeline is iterated to a fixed point, so the result is idempotent.
//! Only model output goes through here; reference captions are scored raw.

use std::sync::LazyLock;

use regex::Regex;

use crate::providers::CaptionRecord;

static HEADER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^[ \t]*#{1,6}[ \t]*").unwrap());
static BULLET_STAR: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^[ \t]*\*[ \t]+").unwrap());
static LIST_PREFIX: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^\s*(\d+[.)]|[-*•])\s+").unwrap());

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalizeOptions {
    pub lowercase: bool,
    /// Punctuation kept in addition to `,` and `.`.
    pub extra_punctuation: Vec<char>,
}

impl Default for NormalizeOptions {
    fn default() -> Self {
        Self { lowercase: true, extra_punctuation: Vec::new() }
    }
}

impl NormalizeOptions {
    fn keeps(&self, c: char) -> bool {
        c.is_alphanumeric() || c == ' ' || c == ',' || c == '.' || self.extra_punctuation.contains(&c)
    }
}

/// Normalises with default options.
pub fn normalize_caption(raw: &str) -> String {
    normalize_with(raw, &NormalizeOptions::default())
}

pub fn normalize_with(raw: &str, opts: &NormalizeOptions) -> String {
    let mut current = single_pass(raw, opts);
    // Converges in two or three passes; the bound is a backstop.
    for _ in 0..16 {
        let next = single_pass(&current, opts);
        if next == current {
            break;
        }
        current = next;
    }
    current
}

fn strip_markdown(line: &str) -> String {
    let line = HEADER.replace(line, "");
    let (keep, rest) = match BULLET_STAR.find(&line) {
        Some(m) => (&line[..m.end()], &line[m.end()..]),
        None => ("", &line[..]),
    };
    let mut out = String::with_capacity(line.len());
    out.push_str(keep);
    out.extend(rest.chars().filter(|c| !matches!(c, '*' | '_' | '`')));
    out
}

fn strip_list_prefix(line: &str) -> &str {
    let mut line = line;
    while let Some(m) = LIST_PREFIX.find(line) {
        line = &line[m.end()..];
    }
    line
}

fn single_pass(raw: &str, opts: &NormalizeOptions) -> String {
    let flattened = raw
        .lines()
        .map(|l| {
            let md = strip_markdown(l);
            strip_list_prefix(&md).to_string()
        })
        .collect::<Vec<_>>()
        .join(" ");

    let filtered: String = flattened
        .chars()
        .filter_map(|c| {
            if c.is_whitespace() {
                Some(' ')
            } else if opts.keeps(c) {
                Some(c)
            } else {
                None
            }
        })
        .collect();

    let collapsed = filtered.split(' ').filter(|w| !w.is_empty()).collect::<Vec<_>>().join(" ");
    let trimmed = collapsed.trim_start_matches([' ', ',', '.']).trim_end();

    if opts.lowercase {
        let lowered: String = trimmed.chars().flat_map(char::to_lowercase).filter(|&c| opts.keeps(c)).collect();
        lowered.split(' ').filter(|w| !w.is_empty()).collect::<Vec<_>>().join(" ")
    } else {
        trimmed.to_string()
    }
}

/// Fills `normalized` on every record; `raw` is left as is.
pub fn normalize_batch(records: Vec<CaptionRecord>) -> Vec<CaptionRecord> {
    normalize_batch_with(records, &NormalizeOptions::default())
}

pub fn normalize_batch_with(mut records: Vec<CaptionRecord>, opts: &NormalizeOptions) -> Vec<CaptionRecord> {
    for r in &mut records {
        r.normalized = normalize_with(&r.raw, opts);
    }
    records
}
