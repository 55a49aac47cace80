use std::io;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::convergence::ConvergenceTime;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Delay moments of one node from running sums.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DelayStats {
    pub count: u64,
    pub mean: f64,
    pub variance: f64,
}

impl DelayStats {
    pub fn from_sums(count: u64, sum: f64, sum_sq: f64) -> Self {
        if count == 0 {
            return Self::default();
        }
        let n = count as f64;
        let mean = sum / n;
        Self {
            count,
            mean,
            variance: (sum_sq / n - mean * mean).max(0.0),
        }
    }
}

/// Column order of [`MetricsReport::to_csv`], identical to the field order.
pub const CSV_COLUMNS: &[&str] = &[
    "seed",
    "nodes",
    "duration_s",
    "event",
    "init_convergence_s",
    "event_convergence_s",
    "excess_error",
    "deficit_error",
    "event_excess_error",
    "event_deficit_error",
    "throughput_pps",
    "delay_mean_s",
    "delay_variance_s2",
    "mac_drops",
    "overflow_drops",
    "range_of_impact_hops",
    "impacted_nodes",
    "final_max_claim_error",
    "final_lex_max_min",
    "conservation_ok",
    "collisions",
    "oracle_updates",
    "neighbour_changes",
    "neighbour_change_rate",
];

/// One run's measurements. Errors are measured during convergence only;
/// delays are per-node means and variances averaged over nodes that
/// delivered at least one packet.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub seed: u64,
    pub nodes: usize,
    pub duration_s: f64,
    /// Scripted event kind, `none` for static runs.
    pub event: String,
    pub init_convergence_s: ConvergenceTime,
    pub event_convergence_s: Option<ConvergenceTime>,
    pub excess_error: f64,
    pub deficit_error: f64,
    pub event_excess_error: Option<f64>,
    pub event_deficit_error: Option<f64>,
    /// Data packets acknowledged per second, network-wide.
    pub throughput_pps: f64,
    pub delay_mean_s: Option<f64>,
    pub delay_variance_s2: Option<f64>,
    pub mac_drops: u64,
    pub overflow_drops: u64,
    pub range_of_impact_hops: Option<f64>,
    pub impacted_nodes: usize,
    /// Largest |claim − oracle| over active nodes at the end of the run.
    pub final_max_claim_error: f64,
    /// Final claims pass the max-min audit against ground truth.
    pub final_lex_max_min: bool,
    pub conservation_ok: bool,
    pub collisions: u64,
    pub oracle_updates: u64,
    /// Links that appeared or disappeared, counted once per change.
    pub neighbour_changes: u64,
    /// Neighbour gains and losses per node per second.
    pub neighbour_change_rate: f64,
}

impl MetricsReport {
    pub fn to_csv(reports: &[MetricsReport]) -> Result<String, ReportError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in reports {
            w.serialize(r)?;
        }
        if reports.is_empty() {
            w.write_record(CSV_COLUMNS)?;
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Lines starting with `#` are skipped.
    pub fn from_csv(text: &str) -> Result<Vec<MetricsReport>, ReportError> {
        let mut r = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        Ok(r.deserialize().collect::<Result<_, _>>()?)
    }

    pub fn to_json(&self) -> Result<String, ReportError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Average per-node delay moments.
    pub fn aggregate_delays(per_node: &[DelayStats]) -> (Option<f64>, Option<f64>) {
        let active: Vec<&DelayStats> = per_node.iter().filter(|d| d.count > 0).collect();
        if active.is_empty() {
            return (None, None);
        }
        let n = active.len() as f64;
        (
            Some(active.iter().map(|d| d.mean).sum::<f64>() / n),
            Some(active.iter().map(|d| d.variance).sum::<f64>() / n),
        )
    }
}
