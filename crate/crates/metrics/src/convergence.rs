use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Time from an event to convergence, or `Never` when the run ended
/// unconverged. Serialized as seconds or the string `"inf"`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub enum ConvergenceTime {
    At(f64),
    Never,
}

impl ConvergenceTime {
    pub fn seconds(self) -> Option<f64> {
        match self {
            ConvergenceTime::At(t) => Some(t),
            ConvergenceTime::Never => None,
        }
    }

    pub fn is_converged(self) -> bool {
        matches!(self, ConvergenceTime::At(_))
    }
}

impl fmt::Display for ConvergenceTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConvergenceTime::At(t) => write!(f, "{t}"),
            ConvergenceTime::Never => f.write_str("inf"),
        }
    }
}

impl Serialize for ConvergenceTime {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            ConvergenceTime::At(t) => s.serialize_f64(*t),
            ConvergenceTime::Never => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ConvergenceTime {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Seconds(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Seconds(t) if t.is_infinite() => Ok(ConvergenceTime::Never),
            Raw::Seconds(t) => Ok(ConvergenceTime::At(t)),
            Raw::Text(s) if s == "inf" => Ok(ConvergenceTime::Never),
            Raw::Text(s) => s
                .parse()
                .map(ConvergenceTime::At)
                .map_err(|_| serde::de::Error::custom(format!("bad convergence time {s:?}"))),
        }
    }
}

/// Streaming form of [`detect_convergence`] over slot-indexed samples.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConvergenceTracker {
    start: u64,
    last_violation: Option<u64>,
    last_sample: Option<u64>,
}

impl ConvergenceTracker {
    pub fn new(start_slot: u64) -> Self {
        Self {
            start: start_slot,
            last_violation: None,
            last_sample: None,
        }
    }

    pub fn start(&self) -> u64 {
        self.start
    }

    pub fn observe(&mut self, slot: u64, within_tolerance: bool) {
        self.last_sample = Some(slot);
        if !within_tolerance {
            self.last_violation = Some(slot);
        }
    }

    /// Slot from which every later sample was within tolerance.
    pub fn converged_slot(&self) -> Option<u64> {
        self.last_sample?;
        match self.last_violation {
            None => Some(self.start),
            Some(v) if Some(v) == self.last_sample => None,
            Some(v) => Some(v + 1),
        }
    }

    pub fn time(&self, slot_len: f64) -> ConvergenceTime {
        match self.converged_slot() {
            Some(s) => ConvergenceTime::At(s.saturating_sub(self.start) as f64 * slot_len),
            None => ConvergenceTime::Never,
        }
    }
}

/// Earliest time, measured from `start`, after which every claim stays within
/// `tol` of the oracle. Samples are `(time, claims)` in time order, with claims
/// aligned to `oracle`.
pub fn detect_convergence(
    samples: &[(f64, Vec<f64>)],
    oracle: &[f64],
    tol: f64,
    start: f64,
) -> ConvergenceTime {
    let within = |claims: &[f64]| claims.iter().zip(oracle).all(|(c, s)| (c - s).abs() <= tol);
    let Some(last_bad) = samples.iter().rposition(|(_, c)| !within(c)) else {
        return if samples.is_empty() {
            ConvergenceTime::Never
        } else {
            ConvergenceTime::At(0.0)
        };
    };
    match samples.get(last_bad + 1) {
        Some((t, _)) => ConvergenceTime::At((t - start).max(0.0)),
        None => ConvergenceTime::Never,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tracker_matches_batch_detection() {
        let oracle = [0.5];
        let claims = [0.0, 0.3, 0.49, 0.6, 0.5, 0.5];
        let samples: Vec<(f64, Vec<f64>)> = claims
            .iter()
            .enumerate()
            .map(|(k, &c)| (k as f64, vec![c]))
            .collect();
        assert_eq!(
            detect_convergence(&samples, &oracle, 0.02, 0.0),
            ConvergenceTime::At(4.0)
        );
        let mut t = ConvergenceTracker::new(0);
        for (k, &c) in claims.iter().enumerate() {
            t.observe(k as u64, (c - 0.5f64).abs() <= 0.02);
        }
        assert_eq!(t.time(1.0), ConvergenceTime::At(4.0));
    }

    #[test]
    fn never_converged_is_sentinel() {
        let samples = vec![(0.0, vec![0.0]), (1.0, vec![0.1])];
        assert_eq!(
            detect_convergence(&samples, &[1.0], 0.01, 0.0),
            ConvergenceTime::Never
        );
        let mut t = ConvergenceTracker::new(10);
        t.observe(10, false);
        assert_eq!(t.time(1.0), ConvergenceTime::Never);
        assert_eq!(ConvergenceTracker::new(0).time(1.0), ConvergenceTime::Never);
    }

    #[test]
    fn already_converged_is_zero() {
        let samples = vec![(3.0, vec![0.2]), (4.0, vec![0.2])];
        assert_eq!(
            detect_convergence(&samples, &[0.2], 0.0, 3.0),
            ConvergenceTime::At(0.0)
        );
    }

    #[test]
    fn serde_round_trip() {
        let v = vec![ConvergenceTime::At(0.25), ConvergenceTime::Never];
        let json = serde_json::to_string(&v).unwrap();
        assert_eq!(json, r#"[0.25,"inf"]"#);
        let back: Vec<ConvergenceTime> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, v);
    }
}
