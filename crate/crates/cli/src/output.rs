use std::fs;
use std::path::Path;

use anyhow::Context;
use atlas_metrics::{MetricsReport, CSV_COLUMNS};
use atlas_sim::{ClaimFrame, NodeSummary, RunOutput, Scenario};
use serde::Serialize;

pub const VERSION: &str = concat!("atlas ", env!("CARGO_PKG_VERSION"));

/// One replicate as written to `summary.json`.
#[derive(Debug, Serialize)]
pub struct Replicate<'a> {
    pub seed: u64,
    pub report: &'a MetricsReport,
    pub nodes: &'a [NodeSummary],
    #[serde(skip_serializing_if = "<[_]>::is_empty")]
    pub claims: &'a [ClaimFrame],
    pub violations: &'a [String],
}

impl<'a> Replicate<'a> {
    pub fn new(seed: u64, out: &'a RunOutput) -> Self {
        Self {
            seed,
            report: &out.report,
            nodes: &out.nodes,
            claims: &out.claims,
            violations: &out.violations,
        }
    }
}

/// Lines prepended to every CSV and trace file. `resolved` must be one line.
pub fn comment_header(resolved: &str) -> String {
    format!("# {VERSION}\n# {resolved}\n")
}

pub fn scenario_line(s: &Scenario) -> String {
    format!(
        "scenario {}",
        serde_json::to_string(s).expect("scenarios serialize")
    )
}

pub fn write(dir: &Path, name: &str, contents: &str) -> anyhow::Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
}

pub fn to_json(value: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("outputs serialize");
    s.push('\n');
    s
}

/// Report rows, each behind its own values for the extra columns `names`.
pub fn prefixed_csv(
    names: &[&str],
    rows: &[(Vec<String>, &MetricsReport)],
) -> anyhow::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(names.iter().copied().chain(CSV_COLUMNS.iter().copied()))?;
    for (leading, report) in rows {
        let body = MetricsReport::to_csv(std::slice::from_ref(*report))?;
        let mut r = csv::Reader::from_reader(body.as_bytes());
        for record in r.records() {
            let record = record?;
            w.write_record(leading.iter().map(String::as_str).chain(record.iter()))?;
        }
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn headers_are_comments_a_report_reader_skips() {
        let s = Scenario::default();
        let out = atlas_sim::run_scenario(&Scenario {
            nodes: 3,
            duration: 0.05,
            ..s.clone()
        })
        .unwrap();
        let csv = comment_header(&scenario_line(&s))
            + &MetricsReport::to_csv(std::slice::from_ref(&out.report)).unwrap();
        assert!(!scenario_line(&s).contains('\n'));
        assert_eq!(
            MetricsReport::from_csv(&csv).unwrap(),
            vec![out.report.clone()]
        );

        let table = prefixed_csv(&["speed"], &[(vec!["10".into()], &out.report)]).unwrap();
        let header = table.lines().next().unwrap();
        assert!(header.starts_with("speed,seed,nodes,"));
        assert_eq!(table.lines().count(), 2);
    }
}
