use std::collections::VecDeque;

/// Queue horizon in seconds the backlog term drains over.
const LEVEL_HORIZON: f64 = 0.02;

/// `min(1, w_enqueue + w_level)` with `w_enqueue = rate · slot_len` and
/// `w_level = (queued / 0.02 s) · slot_len`.
pub fn estimate_demand(enqueue_rate: f64, queued: usize, slot_len: f64) -> f64 {
    let w_enqueue = enqueue_rate * slot_len;
    let w_level = queued as f64 / LEVEL_HORIZON * slot_len;
    (w_enqueue + w_level).clamp(0.0, 1.0)
}

/// Enqueue-rate measurement over a sliding window of slots.
#[derive(Clone, Debug, PartialEq)]
pub struct DemandEstimator {
    window: u64,
    slot_len: f64,
    arrivals: VecDeque<u64>,
}

impl DemandEstimator {
    pub fn new(window_slots: u64, slot_len: f64) -> Self {
        Self {
            window: window_slots.max(1),
            slot_len,
            arrivals: VecDeque::new(),
        }
    }

    pub fn record_enqueue(&mut self, now: u64) {
        self.arrivals.push_back(now);
    }

    /// Arrivals per second over the window ending at `now`.
    pub fn rate(&mut self, now: u64) -> f64 {
        while self
            .arrivals
            .front()
            .is_some_and(|&t| t + self.window <= now)
        {
            self.arrivals.pop_front();
        }
        self.arrivals.len() as f64 / (self.window as f64 * self.slot_len)
    }

    pub fn estimate(&mut self, now: u64, queued: usize) -> f64 {
        let rate = self.rate(now);
        estimate_demand(rate, queued, self.slot_len)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formula_examples() {
        assert!((estimate_demand(125.0, 0, 800e-6) - 0.1).abs() < 1e-12);
        assert!((estimate_demand(0.0, 25, 800e-6) - 1.0).abs() < 1e-12);
        assert_eq!(estimate_demand(0.0, 0, 800e-6), 0.0);
        assert_eq!(estimate_demand(1000.0, 10, 800e-6), 1.0);
    }

    #[test]
    fn sliding_window_rate() {
        // 100-slot window of 800 µs slots: 10 arrivals is 125 pkt/s.
        let mut e = DemandEstimator::new(100, 800e-6);
        for t in (0..100).step_by(10) {
            e.record_enqueue(t);
        }
        assert!((e.rate(99) - 125.0).abs() < 1e-9);
        assert!((e.estimate(99, 0) - 0.1).abs() < 1e-12);
        // The arrival at slot 0 leaves the window at slot 100.
        assert!((e.rate(100) - 112.5).abs() < 1e-9);
        assert_eq!(e.rate(1000), 0.0);
    }
}
