use atlas_core::react::{ReactHeader, WireValue};
use atlas_mac::{
    draw_slot_count, Heard, NodeConfig, NodeRuntime, PersistenceMode, ReceiverMode, Schedule,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn mean_slot_count_tracks_persistence() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for p in [0.01, 0.137, 0.5, 0.99] {
        let frames = 10_000;
        let total: u64 = (0..frames)
            .map(|_| u64::from(draw_slot_count(p, 100, &mut rng)))
            .sum();
        let mean = total as f64 / frames as f64 / 100.0;
        assert!((mean - p).abs() < 0.005, "p = {p}: mean {mean}");
    }
}

fn header(offer: f64, claim: f64) -> ReactHeader {
    ReactHeader {
        offer: WireValue::saturating(offer),
        claim: WireValue::saturating(claim),
        weight: None,
    }
}

/// Drive one node against a single always-acking neighbour for `frames`
/// frames. Packets arrive every `gap` slots. Returns per-frame transmission
/// counts after a two-frame start-up.
fn occupancy(mode: PersistenceMode, w: f64, gap: u64, frames: u64, seed: u64) -> (f64, Vec<u32>) {
    let cfg = NodeConfig {
        persistence_mode: mode,
        receiver_mode: ReceiverMode::Physical,
        ..NodeConfig::default()
    };
    let mut node = NodeRuntime::new(0, cfg, seed).unwrap();
    node.set_demand(w);
    let mut per_frame = Vec::new();
    let mut count = 0;
    for now in 0..frames * 100 {
        if now % 50 == 0 {
            node.on_hear(
                now,
                Heard {
                    from: 1,
                    to: None,
                    header: header(0.5, 0.0),
                    ack: false,
                },
            );
        }
        if gap > 0 && now % gap == 0 {
            node.enqueue(now, &[1]);
        }
        node.begin_slot(now);
        if let Some(p) = node.on_slot(now, &[1]) {
            count += 1;
            if p.dst.is_some() {
                node.on_ack_result(now, true);
            }
        }
        if now % 100 == 99 {
            if now >= 200 {
                per_frame.push(count);
            }
            count = 0;
        }
    }
    (node.persistence(), per_frame)
}

#[test]
fn eager_occupancy_is_bounded_by_packets() {
    // Offers of 0.5 give an eager persistence of 0.5; packets arrive at 0.1.
    let (p, frames) = occupancy(PersistenceMode::Eager, 0.1, 10, 500, 3);
    assert!((p - 0.5).abs() < 0.01, "{p}");
    let mean = frames.iter().sum::<u32>() as f64 / frames.len() as f64 / 100.0;
    assert!(mean <= 0.1f64.min(p) + 0.01, "{mean}");
    assert!(mean > 0.09, "{mean}");
}

#[test]
fn idle_node_stays_silent_without_overload() {
    let (_, frames) = occupancy(PersistenceMode::Eager, 0.0, 0, 100, 4);
    assert!(frames.iter().all(|&c| c == 0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn frame_occupancy_never_exceeds_persistence_plus_one_slot(
        p in 0.0f64..=1.0,
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = Schedule::new(100);
        for _ in 0..200 {
            s.begin_frame(p, &mut rng);
            let k = s.scheduled_slots().count();
            prop_assert_eq!(k as u32, s.k());
            prop_assert!(k as f64 / 100.0 <= p + 0.01 + 1e-12);
            let floor = (p * 100.0).floor() as usize;
            prop_assert!(k == floor || k == floor + 1);
        }
    }

    #[test]
    fn saturated_lazy_node_occupancy_stays_within_a_slot(
        w in 0.06f64..0.5,
        seed in any::<u64>(),
    ) {
        let (p, frames) = occupancy(PersistenceMode::Lazy, w, 1, 30, seed);
        for c in frames {
            prop_assert!(f64::from(c) / 100.0 <= p + 0.01 + 1e-12, "{c} vs {p}");
        }
    }
}
