//! Summary tables and caption-length histograms.
//!
//! Scores print with 4 decimals and the ratio with 3. Rust's fixed-precision
//! formatting rounds exact ties to even, so e.g. `0.00005` (if it were exact)
//! would print as `0.0000`. Rendering is a pure function of its input.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::corruptions::Condition;
use crate::datasets::LengthStats;
use crate::harness::{MetricReport, RunResult};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ReportError {
    #[error("the run has cells but none for the clean condition")]
    NoCleanCells,
    #[error("the run has cells but none for a corrupted condition")]
    NoNoisyCells,
    #[error("no caption length statistics to plot")]
    EmptyStats,
    #[error("unknown format `{0}`")]
    UnknownFormat(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    Markdown,
}

impl FromStr for TableFormat {
    type Err = ReportError;

    fn from_str(s: &str) -> Result<Self, ReportError> {
        match s {
            "csv" => Ok(TableFormat::Csv),
            "markdown" | "md" => Ok(TableFormat::Markdown),
            other => Err(ReportError::UnknownFormat(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChartFormat {
    Csv,
    Svg,
}

impl FromStr for ChartFormat {
    type Err = ReportError;

    fn from_str(s: &str) -> Result<Self, ReportError> {
        match s {
            "csv" => Ok(ChartFormat::Csv),
            "svg" => Ok(ChartFormat::Svg),
            other => Err(ReportError::UnknownFormat(other.to_string())),
        }
    }
}

pub const TABLE1_COLUMNS: [&str; 12] = [
    "Dataset",
    "Model",
    "BLEU-1",
    "BLEU-2",
    "BLEU-3",
    "BLEU-4",
    "METEOR",
    "ROUGE_L",
    "CIDEr",
    "testlen",
    "reflen",
    "similarity",
];

pub const TABLE2_COLUMNS: [&str; 12] = [
    "Noise Type",
    "Level",
    "Model",
    "Ratio",
    "BLEU-1",
    "BLEU-2",
    "BLEU-3",
    "BLEU-4",
    "METEOR",
    "ROUGE-L",
    "CIDEr",
    "Similarity",
];

const MISSING: &str = "n/a";

fn f4(v: Option<f64>) -> String {
    v.map_or_else(|| MISSING.to_string(), |v| format!("{v:.4}"))
}

fn score_cells(r: &MetricReport) -> Vec<String> {
    let s = r.scores.as_ref();
    vec![
        f4(s.map(|s| s.bleu1)),
        f4(s.map(|s| s.bleu2)),
        f4(s.map(|s| s.bleu3)),
        f4(s.map(|s| s.bleu4)),
        f4(s.map(|s| s.meteor)),
        f4(s.map(|s| s.rouge_l)),
        f4(s.map(|s| s.cider)),
    ]
}

fn render(header: &[&str], rows: &[Vec<String>], format: TableFormat) -> String {
    match format {
        TableFormat::Csv => {
            let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
            w.write_record(header).expect("in-memory write");
            for r in rows {
                w.write_record(r).expect("in-memory write");
            }
            String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is UTF-8")
        }
        TableFormat::Markdown => {
            let line = |cells: &[&str]| format!("| {} |\n", cells.join(" | "));
            let mut out = line(header);
            out.push_str(&line(&vec!["---"; header.len()]));
            for r in rows {
                out.push_str(&line(
                    &r.iter()
                        .map(|c| c.replace('|', "\\|"))
                        .collect::<Vec<_>>()
                        .iter()
                        .map(String::as_str)
                        .collect::<Vec<_>>(),
                ));
            }
            out
        }
    }
}

/// Clean-condition cells in run order. A run with no cells renders as a
/// header-only table.
pub fn render_table1(result: &RunResult, format: TableFormat) -> Result<String, ReportError> {
    let clean: Vec<&MetricReport> = result.cells.iter().filter(|c| c.condition.is_clean()).collect();
    if clean.is_empty() && !result.cells.is_empty() {
        return Err(ReportError::NoCleanCells);
    }
    let rows: Vec<Vec<String>> = clean
        .iter()
        .map(|r| {
            let mut row = vec![r.dataset.clone(), r.model_id.clone()];
            row.extend(score_cells(r));
            row.push(r.scores.as_ref().map_or(MISSING.into(), |s| s.testlen.to_string()));
            row.push(r.scores.as_ref().map_or(MISSING.into(), |s| s.reflen.to_string()));
            row.push(f4(r.similarity));
            row
        })
        .collect();
    Ok(render(&TABLE1_COLUMNS, &rows, format))
}

/// Noise type and level labels of a corrupted condition.
pub fn condition_labels(condition: &Condition) -> (String, String) {
    match condition {
        Condition::Clean => ("Clean".into(), String::new()),
        Condition::Single(s) => (s.kind.display_name().into(), s.level.display_name().into()),
        Condition::Mixture(m) => (
            m.steps.iter().map(|s| s.kind.display_name()).collect::<Vec<_>>().join(" + "),
            m.steps.iter().map(|s| s.level.display_name()).collect::<Vec<_>>().join("/"),
        ),
    }
}

/// Corrupted-condition cells grouped by noise type, then level (both by
/// label), then model, dataset, tier and condition id. The order does not
/// depend on the order of cells in the run.
pub fn render_table2(result: &RunResult, format: TableFormat) -> Result<String, ReportError> {
    let mut noisy: Vec<(String, String, &MetricReport)> = result
        .cells
        .iter()
        .filter(|c| !c.condition.is_clean())
        .map(|c| {
            let (kind, level) = condition_labels(&c.condition);
            (kind, level, c)
        })
        .collect();
    if noisy.is_empty() && !result.cells.is_empty() {
        return Err(ReportError::NoNoisyCells);
    }
    noisy.sort_by(|a, b| {
        (&a.0, &a.1, &a.2.model_id, &a.2.dataset, a.2.tier, &a.2.condition_id).cmp(&(
            &b.0,
            &b.1,
            &b.2.model_id,
            &b.2.dataset,
            b.2.tier,
            &b.2.condition_id,
        ))
    });
    let rows: Vec<Vec<String>> = noisy
        .into_iter()
        .map(|(kind, level, r)| {
            let mut row = vec![kind, level, r.model_id.clone()];
            row.push(r.ratio.map_or(MISSING.into(), |v| format!("{v:.3}")));
            row.extend(score_cells(r));
            row.push(f4(r.similarity));
            row
        })
        .collect();
    Ok(render(&TABLE2_COLUMNS, &rows, format))
}

struct Series<'a> {
    name: &'a str,
    counts: &'a BTreeMap<usize, usize>,
}

/// Caption length histogram for one or more datasets.
///
/// CSV is `bucket,count` for a single series and `bucket,<name>...` for
/// several. SVG is a grouped bar chart with a legend.
pub fn render_length_histogram(stats: &[LengthStats], format: ChartFormat) -> Result<String, ReportError> {
    if stats.is_empty() || stats.iter().all(|s| s.histogram.is_empty()) {
        return Err(ReportError::EmptyStats);
    }
    let series: Vec<Series> = stats.iter().map(|s| Series { name: &s.name, counts: &s.histogram }).collect();
    let buckets: Vec<usize> = {
        let mut b: Vec<usize> = series.iter().flat_map(|s| s.counts.keys().copied()).collect();
        b.sort_unstable();
        b.dedup();
        b
    };
    Ok(match format {
        ChartFormat::Csv => {
            let mut header = vec!["bucket".to_string()];
            if series.len() == 1 {
                header.push("count".into());
            } else {
                header.extend(series.iter().map(|s| s.name.to_string()));
            }
            let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
            w.write_record(&header).expect("in-memory write");
            for b in &buckets {
                let mut row = vec![b.to_string()];
                row.extend(series.iter().map(|s| s.counts.get(b).copied().unwrap_or(0).to_string()));
                w.write_record(&row).expect("in-memory write");
            }
            String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is UTF-8")
        }
        ChartFormat::Svg => svg_chart(&series, &buckets),
    })
}

const PALETTE: [&str; 6] = ["#4c78a8", "#f58518", "#54a24b", "#e45756", "#72b7b2", "#b279a2"];

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn svg_chart(series: &[Series], buckets: &[usize]) -> String {
    use fmt::Write;

    let (left, right, top, bottom) = (60.0, 20.0, 30.0 + 18.0 * series.len() as f64, 50.0);
    let bar_w = 8.0;
    let group_w = bar_w * series.len() as f64 + 4.0;
    let plot_w = (group_w * buckets.len() as f64).max(200.0);
    let plot_h = 240.0;
    let width = left + plot_w + right;
    let height = top + plot_h + bottom;
    let max = series.iter().flat_map(|s| s.counts.values().copied()).max().unwrap_or(1).max(1) as f64;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(out, r#"<rect width="{width}" height="{height}" fill="white"/>"#);
    for (i, s) in series.iter().enumerate() {
        let y = 14.0 + 18.0 * i as f64;
        let _ = writeln!(
            out,
            r#"<rect x="{left}" y="{}" width="12" height="12" fill="{}"/>"#,
            y - 10.0,
            PALETTE[i % PALETTE.len()]
        );
        let _ = writeln!(out, r#"<text x="{}" y="{y}">{}</text>"#, left + 18.0, xml_escape(s.name));
    }
    let base = top + plot_h;
    let _ = writeln!(out, r#"<line x1="{left}" y1="{base}" x2="{}" y2="{base}" stroke="black"/>"#, left + plot_w);
    let _ = writeln!(out, r#"<line x1="{left}" y1="{top}" x2="{left}" y2="{base}" stroke="black"/>"#);
    let _ = writeln!(out, r#"<text x="{left}" y="{}" text-anchor="end" dx="-4">{}</text>"#, top + 4.0, max as usize);
    let _ = writeln!(out, r#"<text x="{left}" y="{base}" text-anchor="end" dx="-4">0</text>"#);
    for (bi, b) in buckets.iter().enumerate() {
        let gx = left + 2.0 + group_w * bi as f64;
        for (si, s) in series.iter().enumerate() {
            let count = s.counts.get(b).copied().unwrap_or(0);
            if count == 0 {
                continue;
            }
            let h = plot_h * count as f64 / max;
            let _ = writeln!(
                out,
                r#"<rect x="{:.1}" y="{:.1}" width="{bar_w}" height="{:.1}" fill="{}"><title>{}: {} tokens, {}</title></rect>"#,
                gx + bar_w * si as f64,
                base - h,
                h,
                PALETTE[si % PALETTE.len()],
                xml_escape(s.name),
                b,
                count
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{}" text-anchor="middle">{b}</text>"#,
            gx + group_w / 2.0 - 2.0,
            base + 14.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{}" text-anchor="middle">Caption length (tokens)</text>"#,
        left + plot_w / 2.0,
        base + 36.0
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">Count</text>"#,
        top + plot_h / 2.0,
        top + plot_h / 2.0
    );
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corruptions::{CorruptionKind, CorruptionSpec, Level};
    use crate::metrics::CorpusScores;
    use crate::providers::PromptTier;

    fn cell(
        condition: Condition,
        model: &str,
        vals: [f64; 7],
        testlen: usize,
        reflen: usize,
        sim: f64,
    ) -> MetricReport {
        MetricReport {
            dataset: "flickr_1k".into(),
            condition_id: condition.id(),
            condition,
            model_id: model.into(),
            tier: PromptTier::Basic,
            valid: true,
            scores: Some(CorpusScores {
                bleu1: vals[0],
                bleu2: vals[1],
                bleu3: vals[2],
                bleu4: vals[3],
                meteor: vals[4],
                rouge_l: vals[5],
                cider: vals[6],
                testlen,
                reflen,
            }),
            similarity: Some(sim),
            ratio: Some(testlen as f64 / reflen as f64),
            samples: 1000,
            scored: 1000,
            errors: 0,
            error: None,
        }
    }

    fn run(cells: Vec<MetricReport>) -> RunResult {
        RunResult { name: "t".into(), run_seed: 1, embedder: "builtin".into(), cells }
    }

    fn noisy(kind: CorruptionKind, level: Level, model: &str) -> MetricReport {
        cell(Condition::Single(CorruptionSpec::new(kind, level)), model, [0.5; 7], 8890, 10000, 0.3911)
    }

    #[test]
    fn table1_row_text() {
        let r = run(vec![cell(
            Condition::Clean,
            "Blip-2",
            [0.6774, 0.4640, 0.3103, 0.2057, 0.2075, 0.3994, 0.4794],
            9371,
            9554,
            0.6492,
        )]);
        let md = render_table1(&r, TableFormat::Markdown).unwrap();
        assert!(md.contains("| flickr_1k | Blip-2 | 0.6774 | 0.4640 | 0.3103 | 0.2057 | 0.2075 | 0.3994 | 0.4794 | 9371 | 9554 | 0.6492 |"));
        let csv = render_table1(&r, TableFormat::Csv).unwrap();
        assert_eq!(
            csv.lines().nth(1).unwrap(),
            "flickr_1k,Blip-2,0.6774,0.4640,0.3103,0.2057,0.2075,0.3994,0.4794,9371,9554,0.6492"
        );
        assert_eq!(csv.lines().next().unwrap(), TABLE1_COLUMNS.join(","));
    }

    #[test]
    fn empty_and_missing_clean() {
        let empty = render_table1(&run(vec![]), TableFormat::Csv).unwrap();
        assert_eq!(empty.lines().count(), 1);
        let only_noisy = run(vec![noisy(CorruptionKind::Snow, Level::Low, "m")]);
        assert_eq!(render_table1(&only_noisy, TableFormat::Csv), Err(ReportError::NoCleanCells));
        let only_clean = run(vec![cell(Condition::Clean, "m", [0.1; 7], 1, 1, 0.1)]);
        assert_eq!(render_table2(&only_clean, TableFormat::Csv), Err(ReportError::NoNoisyCells));
    }

    #[test]
    fn table2_grouping_is_permutation_stable() {
        let cells = vec![
            noisy(CorruptionKind::Snow, Level::Low, "b"),
            noisy(CorruptionKind::AdversarialPatch, Level::Medium, "a"),
            noisy(CorruptionKind::AdversarialPatch, Level::High, "z"),
            noisy(CorruptionKind::DefocusBlur, Level::Low, "c"),
        ];
        let a = render_table2(&run(cells.clone()), TableFormat::Markdown).unwrap();
        let mut rev = cells;
        rev.reverse();
        assert_eq!(a, render_table2(&run(rev), TableFormat::Markdown).unwrap());
        let first_cols: Vec<String> =
            a.lines().skip(2).map(|l| l.split(" | ").take(2).collect::<Vec<_>>().join(",")).collect();
        assert_eq!(first_cols, ["| Adversarial,High", "| Adversarial,Medium", "| Defocus Blur,Low", "| Snow,Low"]);
        assert!(a.contains("| Adversarial | High | z | 0.889 |"));
    }

    #[test]
    fn invalid_cells_render_placeholders() {
        let mut c = cell(Condition::Clean, "m", [0.1; 7], 1, 1, 0.1);
        c.valid = false;
        c.scores = None;
        c.similarity = None;
        let out = render_table1(&run(vec![c]), TableFormat::Csv).unwrap();
        assert_eq!(out.lines().nth(1).unwrap(), "flickr_1k,m,n/a,n/a,n/a,n/a,n/a,n/a,n/a,n/a,n/a,n/a");
    }

    fn stats(name: &str, h: &[(usize, usize)]) -> LengthStats {
        LengthStats {
            name: name.into(),
            histogram: h.iter().copied().collect(),
            references: h.iter().map(|x| x.1).sum(),
            mean: 0.0,
            median: 0.0,
        }
    }

    #[test]
    fn histograms() {
        let one = render_length_histogram(&[stats("f", &[(3, 1)])], ChartFormat::Csv).unwrap();
        assert_eq!(one, "bucket,count\n3,1\n");
        let two = render_length_histogram(&[stats("flickr", &[(3, 2)]), stats("nocaps", &[(5, 1)])], ChartFormat::Csv)
            .unwrap();
        assert_eq!(two, "bucket,flickr,nocaps\n3,2,0\n5,0,1\n");
        let svg = render_length_histogram(&[stats("flickr", &[(3, 2)]), stats("no<caps", &[(5, 1)])], ChartFormat::Svg)
            .unwrap();
        assert!(svg.starts_with("<svg") && svg.contains(">flickr</text>") && svg.contains("no&lt;caps"));
        assert_eq!(svg.matches("<rect x=").count(), 2 + 2);
        assert_eq!(render_length_histogram(&[], ChartFormat::Svg), Err(ReportError::EmptyStats));
    }
}
