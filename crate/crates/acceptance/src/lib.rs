//! Reporting helpers for the acceptance checks.

use std::fmt::Write as _;

use atlas_metrics::ConvergenceTime;

/// Outcome of one numbered check.
#[derive(Clone, Debug, PartialEq)]
pub struct Verdict {
    pub id: u32,
    pub title: String,
    pub pass: bool,
    pub detail: String,
}

impl Verdict {
    pub fn line(&self) -> String {
        format!(
            "{} {:>2} {}: {}",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.detail
        )
    }
}

/// Collects verdicts and prints each as it is recorded.
#[derive(Debug, Default)]
pub struct Checklist {
    verdicts: Vec<Verdict>,
}

impl Checklist {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, id: u32, title: &str, pass: bool, detail: impl Into<String>) {
        let v = Verdict {
            id,
            title: title.to_owned(),
            pass,
            detail: detail.into(),
        };
        println!("{}", v.line());
        self.verdicts.push(v);
    }

    pub fn verdicts(&self) -> &[Verdict] {
        &self.verdicts
    }

    pub fn all_passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }

    pub fn summary(&self) -> String {
        let failed: Vec<u32> = self
            .verdicts
            .iter()
            .filter(|v| !v.pass)
            .map(|v| v.id)
            .collect();
        let mut s = format!(
            "{} of {} checks passed",
            self.verdicts.len() - failed.len(),
            self.verdicts.len()
        );
        if !failed.is_empty() {
            let _ = write!(s, "; failed: {failed:?}");
        }
        s
    }
}

/// Mean in seconds; a single unconverged run makes the mean infinite.
pub fn mean_seconds(times: &[ConvergenceTime]) -> f64 {
    if times.is_empty() {
        return f64::NAN;
    }
    let total: f64 = times
        .iter()
        .map(|t| t.seconds().unwrap_or(f64::INFINITY))
        .sum();
    total / times.len() as f64
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.iter().sum::<f64>() / values.len() as f64
}
