use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Relative persistence error split by sign; both are `geomean(1 + e) − 1`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PersistenceError {
    pub excess: f64,
    pub deficit: f64,
}

impl PersistenceError {
    pub fn total(&self) -> f64 {
        self.excess + self.deficit
    }
}

/// Geometric-mean accuracies. Every sample enters both classes; a sample on
/// the wrong side of the target contributes accuracy 1 to that class.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ErrorAccumulator {
    log_excess: f64,
    log_deficit: f64,
    samples: u64,
}

impl ErrorAccumulator {
    /// Add persistence `p` against target `s`; targets of zero are skipped.
    pub fn add(&mut self, p: f64, s: f64) {
        if s <= 0.0 {
            return;
        }
        let e = (p - s) / s;
        self.log_excess += e.max(0.0).ln_1p();
        self.log_deficit += (-e).max(0.0).ln_1p();
        self.samples += 1;
    }

    pub fn samples(&self) -> u64 {
        self.samples
    }

    pub fn merge(&mut self, other: &ErrorAccumulator) {
        self.log_excess += other.log_excess;
        self.log_deficit += other.log_deficit;
        self.samples += other.samples;
    }

    pub fn result(&self) -> PersistenceError {
        if self.samples == 0 {
            return PersistenceError::default();
        }
        let n = self.samples as f64;
        PersistenceError {
            excess: (self.log_excess / n).exp_m1(),
            deficit: (self.log_deficit / n).exp_m1(),
        }
    }
}

/// Error over `(p, s)` pairs.
pub fn relative_error(samples: &[(f64, f64)]) -> PersistenceError {
    let mut acc = ErrorAccumulator::default();
    for &(p, s) in samples {
        acc.add(p, s);
    }
    acc.result()
}

/// Per-node persistence averaged over consecutive, non-overlapping windows.
/// Closed windows are kept so only those inside a convergence period count.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct WindowedError {
    open: BTreeMap<u32, (f64, u32)>,
    closed: Vec<(u64, f64, f64)>,
}

impl WindowedError {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn sample(&mut self, node: u32, p: f64) {
        let e = self.open.entry(node).or_insert((0.0, 0));
        e.0 += p;
        e.1 += 1;
    }

    /// Close the window ending at `slot`; `target` gives each node's oracle
    /// value, and nodes without a positive target are dropped.
    pub fn close(&mut self, slot: u64, target: impl Fn(u32) -> f64) {
        for (node, (sum, n)) in std::mem::take(&mut self.open) {
            let s = target(node);
            if s > 0.0 && n > 0 {
                self.closed.push((slot, sum / f64::from(n), s));
            }
        }
    }

    /// Error over windows that closed at `from..=until`.
    pub fn result(&self, from: u64, until: u64) -> PersistenceError {
        let mut acc = ErrorAccumulator::default();
        for &(slot, p, s) in &self.closed {
            if (from..=until).contains(&slot) {
                acc.add(p, s);
            }
        }
        acc.result()
    }

    pub fn windows(&self) -> usize {
        self.closed.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(
            relative_error(&[(0.3, 0.3), (0.1, 0.1)]),
            PersistenceError::default()
        );
        let e = relative_error(&[(0.36, 0.3), (0.3, 0.3)]);
        assert!((e.excess - (1.2f64.sqrt() - 1.0)).abs() < 1e-12);
        assert!((e.excess - 0.0954).abs() < 1e-4);
        assert_eq!(e.deficit, 0.0);
        let d = relative_error(&[(0.08, 0.1), (0.16, 0.2)]);
        assert!((d.deficit - 0.2).abs() < 1e-12);
        assert_eq!(d.excess, 0.0);
    }

    #[test]
    fn zero_targets_are_excluded() {
        assert_eq!(relative_error(&[(0.5, 0.0)]), PersistenceError::default());
    }

    #[test]
    fn windows_respect_the_period() {
        let mut w = WindowedError::new();
        w.sample(1, 0.2);
        w.sample(1, 0.4);
        w.close(100, |_| 0.3);
        w.sample(1, 0.3);
        w.close(200, |_| 0.3);
        assert_eq!(w.windows(), 2);
        assert_eq!(w.result(101, 200), PersistenceError::default());
        assert!(w.result(0, 100).total() < 1e-12);
        w.sample(1, 0.6);
        w.close(300, |_| 0.3);
        assert!((w.result(300, 300).excess - 1.0).abs() < 1e-12);
    }
}
