use std::path::{Path, PathBuf};

use chorbench_core::bench::BenchmarkReport;
use serde::Serialize;

use crate::{io_err, write_file, RunError};

pub const REPORT_JSON: &str = "report.json";
pub const SUMMARY_CSV: &str = "summary.csv";
pub const CASES_JSONL: &str = "cases.jsonl";

#[derive(Serialize)]
struct CsvRow<'a> {
    shot: &'a str,
    model: &'a str,
    cost: f64,
    tokens: f64,
    f1_macro: f64,
    compilability_pct: f64,
}

fn summary_csv(report: &BenchmarkReport) -> Result<Vec<u8>, RunError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &report.summary {
        w.serialize(CsvRow {
            shot: r.shot.as_str(),
            model: &r.model,
            cost: r.avg_cost_usd,
            tokens: r.avg_tokens,
            f1_macro: r.f1_macro,
            compilability_pct: r.compilability_pct,
        })
        .map_err(|e| RunError::Format(e.to_string()))?;
    }
    if report.summary.is_empty() {
        w.write_record(["shot", "model", "cost", "tokens", "f1_macro", "compilability_pct"])
            .map_err(|e| RunError::Format(e.to_string()))?;
    }
    w.into_inner().map_err(|e| RunError::Format(e.to_string()))
}

/// Writes `report.json`, `summary.csv` (one row per prompt variant and llm)
/// and `cases.jsonl` (one line per case). Output depends only on the report.
pub fn export_report(report: &BenchmarkReport, dir: &Path) -> Result<Vec<PathBuf>, RunError> {
    let json = serde_json::to_string_pretty(report).map_err(|e| RunError::Format(e.to_string()))?;
    let mut cases = String::new();
    for c in &report.cases {
        cases.push_str(&serde_json::to_string(c).map_err(|e| RunError::Format(e.to_string()))?);
        cases.push('\n');
    }
    let files = [
        (dir.join(REPORT_JSON), format!("{json}\n").into_bytes()),
        (dir.join(SUMMARY_CSV), summary_csv(report)?),
        (dir.join(CASES_JSONL), cases.into_bytes()),
    ];
    for (path, bytes) in &files {
        write_file(path, bytes)?;
    }
    Ok(files.into_iter().map(|(p, _)| p).collect())
}

pub fn load_report(path: &Path) -> Result<BenchmarkReport, RunError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| RunError::Format(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use chorbench_core::bench::{aggregate, CaseResult};
    use chorbench_core::llm::{PromptVariant, TestCase};

    fn report() -> BenchmarkReport {
        let mut cases = Vec::new();
        for llm in ["x/alpha", "y/beta"] {
            for v in [PromptVariant::OneShot, PromptVariant::TwoShot] {
                let tc = TestCase { llm_id: llm.into(), prompt_variant: v, model_id: "m".into() };
                cases.push(CaseResult::from_outcomes(tc, &[], 0.125, 2048));
            }
        }
        aggregate(cases)
    }

    #[test]
    fn four_rows_and_stable_bytes() {
        let dir = std::env::temp_dir().join(format!("chorbench-export-{}", std::process::id()));
        let r = report();
        export_report(&r, &dir).unwrap();
        let csv = std::fs::read_to_string(dir.join(SUMMARY_CSV)).unwrap();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "shot,model,cost,tokens,f1_macro,compilability_pct");
        assert_eq!(lines.len(), 5);
        assert!(lines[1].starts_with("one-shot,x/alpha,0.125,2048"));
        let first: Vec<Vec<u8>> = [REPORT_JSON, SUMMARY_CSV, CASES_JSONL].iter().map(|f| std::fs::read(dir.join(f)).unwrap()).collect();
        let reloaded = load_report(&dir.join(REPORT_JSON)).unwrap();
        assert_eq!(reloaded, r);
        export_report(&reloaded, &dir).unwrap();
        let second: Vec<Vec<u8>> = [REPORT_JSON, SUMMARY_CSV, CASES_JSONL].iter().map(|f| std::fs::read(dir.join(f)).unwrap()).collect();
        assert_eq!(first, second);
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
