//! Summary tables over one or more runs.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::runner::RunResult;
use crate::RunError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
    Jsonl,
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Csv => "csv",
            ReportFormat::Markdown => "md",
            ReportFormat::Jsonl => "jsonl",
        }
    }
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            "jsonl" => Ok(ReportFormat::Jsonl),
            other => Err(format!(
                "unknown report format {other:?} (expected csv, markdown or jsonl)"
            )),
        }
    }
}

/// One `(run, metric)` pair, in CSV column order.
#[derive(Serialize)]
struct Row<'a> {
    language: &'a str,
    direction: &'a str,
    strategy: &'a str,
    n_support: usize,
    metric: &'a str,
    score: f64,
    sentence_count: usize,
    config_digest: &'a str,
}

fn rows(results: &[RunResult]) -> impl Iterator<Item = Row<'_>> {
    results.iter().flat_map(|r| {
        r.scores.iter().map(move |s| Row {
            language: &r.language,
            direction: r.direction.name(),
            strategy: r.strategy.name(),
            n_support: r.n_support,
            metric: &s.metric_name,
            score: s.corpus_score,
            sentence_count: s.sentence_count,
            config_digest: &r.config_digest,
        })
    })
}

pub fn render_report(results: &[RunResult], format: ReportFormat) -> Result<String, RunError> {
    if results.is_empty() {
        return Err(RunError::Config("report needs at least one result".into()));
    }
    Ok(match format {
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for row in rows(results) {
                w.serialize(row).map_err(|e| RunError::Config(e.to_string()))?;
            }
            String::from_utf8(w.into_inner().map_err(|e| RunError::Config(e.to_string()))?)
                .expect("csv output is UTF-8")
        }
        ReportFormat::Jsonl => rows(results)
            .map(|r| serde_json::to_string(&r).expect("row serializes") + "\n")
            .collect(),
        ReportFormat::Markdown => markdown(results),
    })
}

/// One row per run sorted by support size, one column per metric.
fn markdown(results: &[RunResult]) -> String {
    let mut metrics: Vec<&str> = Vec::new();
    for r in results {
        for s in &r.scores {
            if !metrics.contains(&s.metric_name.as_str()) {
                metrics.push(&s.metric_name);
            }
        }
    }
    let mut sorted: Vec<&RunResult> = results.iter().collect();
    sorted.sort_by(|a, b| {
        (a.n_support, a.strategy.name(), a.direction.name(), &a.language).cmp(&(
            b.n_support,
            b.strategy.name(),
            b.direction.name(),
            &b.language,
        ))
    });

    let mut out = String::from("| n | language | direction | strategy |");
    for m in &metrics {
        out.push_str(&format!(" {m} |"));
    }
    out.push_str("\n|---:|---|---|---|");
    out.push_str(&"---:|".repeat(metrics.len()));
    out.push('\n');
    for r in sorted {
        out.push_str(&format!(
            "| {} | {} | {} | {} |",
            r.n_support,
            r.language,
            r.direction.name(),
            r.strategy.name()
        ));
        for m in &metrics {
            match r.score(m) {
                Some(v) => out.push_str(&format!(" {v:.2} |")),
                None => out.push_str(" – |"),
            }
        }
        out.push('\n');
    }
    out
}

/// Write `report.<ext>` into `dir`, creating it if needed.
pub fn emit_report(results: &[RunResult], format: ReportFormat, dir: &Path) -> Result<PathBuf, RunError> {
    let text = render_report(results, format)?;
    let path = dir.join(format!("report.{}", format.extension()));
    let io = |e| RunError::Io {
        path: path.clone(),
        source: e,
    };
    fs::create_dir_all(dir).map_err(io)?;
    fs::write(&path, text).map_err(io)?;
    Ok(path)
}

/// Write `run_result.json` and `report.csv` for a single run into `dir`.
pub fn write_run(result: &RunResult, dir: &Path) -> Result<(PathBuf, PathBuf), RunError> {
    let json_path = dir.join("run_result.json");
    fs::create_dir_all(dir).map_err(|e| RunError::Io {
        path: dir.to_path_buf(),
        source: e,
    })?;
    fs::write(&json_path, result.to_json()).map_err(|e| RunError::Io {
        path: json_path.clone(),
        source: e,
    })?;
    let csv_path = emit_report(std::slice::from_ref(result), ReportFormat::Csv, dir)?;
    Ok((json_path, csv_path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runner::Timing;
    use igtmt_core::metrics::ScoreReport;
    use igtmt_core::prompt::{Direction, Strategy};

    fn result(n: usize, bleu: f64) -> RunResult {
        RunResult {
            corpus: "mini".into(),
            language: "swa".into(),
            direction: Direction::ToEnglish,
            strategy: Strategy::GlossShot,
            n_support: n,
            model_id: "m".into(),
            config_digest: format!("d{n}"),
            failed_entries: 0,
            per_entry: vec![],
            scores: vec![
                ScoreReport::new("bleu", bleu, 3, "sig"),
                ScoreReport::new("chrf++", 50.0, 3, "sig"),
            ],
            timing: Timing::default(),
        }
    }

    #[test]
    fn csv_has_header_and_one_row_per_metric() {
        let text = render_report(&[result(2, 12.5)], ReportFormat::Csv).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines[0],
            "language,direction,strategy,n_support,metric,score,sentence_count,config_digest"
        );
        assert_eq!(lines[1], "swa,to-english,gloss-shot,2,bleu,12.5,3,d2");
        assert_eq!(lines.len(), 3);
    }

    #[test]
    fn markdown_rows_ascend_by_n() {
        let text = render_report(
            &[result(21, 3.0), result(3, 1.0), result(9, 2.0)],
            ReportFormat::Markdown,
        )
        .unwrap();
        let body: Vec<&str> = text.lines().skip(2).collect();
        assert_eq!(body.len(), 3);
        assert!(body[0].starts_with("| 3 |"));
        assert!(body[1].starts_with("| 9 |"));
        assert!(body[2].starts_with("| 21 |"));
        assert!(body[0].ends_with("| 1.00 | 50.00 |"));
    }

    #[test]
    fn jsonl_one_line_per_run_and_metric() {
        let text = render_report(&[result(1, 1.0), result(2, 2.0)], ReportFormat::Jsonl).unwrap();
        assert_eq!(text.lines().count(), 4);
        let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        assert_eq!(first["metric"], "bleu");
    }

    #[test]
    fn empty_and_unwritable() {
        assert!(render_report(&[], ReportFormat::Csv).is_err());
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("f");
        fs::write(&file, "").unwrap();
        assert!(emit_report(&[result(1, 1.0)], ReportFormat::Csv, &file.join("sub")).is_err());
    }
}
