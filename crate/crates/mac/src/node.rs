use std::collections::{BTreeMap, BTreeSet, VecDeque};

use atlas_core::allocation::{DemandId, ResourceId};
use atlas_core::react::{
    Auctioneer, AuctioneerEvent, Bidder, BidderEvent, EngineConfig, ReactHeader, Weight, WireValue,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{ConfigError, NodeConfig, ReceiverMode};
use crate::demand::DemandEstimator;
use crate::neighbours::NeighbourTable;
use crate::packet::{Ack, MacPacket, PacketKind, DATA_PAYLOAD};
use crate::persistence::{apply_overrides, compute_persistence, OverrideContext};
use crate::schedule::Schedule;

/// Capacity of every node's own receive auction.
pub const RECEIVE_CAPACITY: f64 = 1.0;

/// A decoded transmission as seen by one listener.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Heard {
    pub from: u32,
    pub to: Option<u32>,
    pub header: ReactHeader,
    pub ack: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AckResult {
    Delivered,
    Retrying,
    Dropped,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NodeStats {
    pub arrivals: u64,
    pub overflow_drops: u64,
    pub delivered: u64,
    pub mac_drops: u64,
    pub data_sent: u64,
    pub dummies_sent: u64,
    pub beacons_sent: u64,
    pub received: u64,
    pub delay_count: u64,
    pub delay_sum: f64,
    pub delay_sum_sq: f64,
}

impl NodeStats {
    pub fn delay_mean(&self) -> Option<f64> {
        (self.delay_count > 0).then(|| self.delay_sum / self.delay_count as f64)
    }

    pub fn delay_variance(&self) -> Option<f64> {
        let mean = self.delay_mean()?;
        Some((self.delay_sum_sq / self.delay_count as f64 - mean * mean).max(0.0))
    }
}

#[derive(Clone, Debug, PartialEq)]
enum DemandSource {
    Nominal(f64),
    Estimated(DemandEstimator),
}

/// ATLAS state of one node: a bidder for its own transmit demand, an
/// auctioneer for its own receive capacity, the frame schedule and the queue.
#[derive(Clone, Debug)]
pub struct NodeRuntime {
    id: u32,
    config: NodeConfig,
    bidder: Bidder,
    auctioneer: Auctioneer,
    neighbours: NeighbourTable,
    /// Neighbours we have addressed data to; kept until they time out, like
    /// `served` on the receiving side.
    addressed: BTreeSet<u32>,
    /// Queued packets per destination.
    queued_to: BTreeMap<u32, usize>,
    /// Senders and the slot we first decoded data from them addressed to us;
    /// kept until the sender times out as a neighbour.
    served: BTreeMap<u32, u64>,
    /// Receivers that have acked our data, and so count us as a bidder;
    /// kept until they time out as a neighbour.
    confirmed: BTreeSet<u32>,
    discovery_until: u64,
    schedule: Schedule,
    dummy: bool,
    demand: DemandSource,
    queue: VecDeque<MacPacket>,
    in_flight: bool,
    next_packet: u64,
    rng: ChaCha8Rng,
    stats: NodeStats,
}

impl NodeRuntime {
    pub fn new(id: u32, config: NodeConfig, seed: u64) -> Result<Self, ConfigError> {
        config.validate()?;
        let engine = EngineConfig {
            quantize: true,
            always_send: false,
            weighted: config.weighted,
        };
        let mut bidder = Bidder::new(DemandId(id), engine);
        let mut auctioneer = Auctioneer::new(ResourceId(id), engine);
        bidder.handle(BidderEvent::Join(ResourceId(id)));
        auctioneer.handle(AuctioneerEvent::SetCapacity(RECEIVE_CAPACITY));
        auctioneer.handle(AuctioneerEvent::Join(DemandId(id)));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(u64::from(id));
        let mut node = Self {
            id,
            bidder,
            auctioneer,
            neighbours: NeighbourTable::new(config.lost_nbr_slots()),
            addressed: BTreeSet::new(),
            queued_to: BTreeMap::new(),
            served: BTreeMap::new(),
            confirmed: BTreeSet::new(),
            discovery_until: 0,
            schedule: Schedule::new(config.v),
            dummy: false,
            demand: DemandSource::Nominal(0.0),
            queue: VecDeque::new(),
            in_flight: false,
            next_packet: 0,
            rng,
            stats: NodeStats::default(),
            config,
        };
        node.settle();
        Ok(node)
    }

    pub fn id(&self) -> u32 {
        self.id
    }

    pub fn config(&self) -> &NodeConfig {
        &self.config
    }

    pub fn bidder(&self) -> &Bidder {
        &self.bidder
    }

    pub fn auctioneer(&self) -> &Auctioneer {
        &self.auctioneer
    }

    pub fn neighbours(&self) -> &NeighbourTable {
        &self.neighbours
    }

    /// Auctions the bidder attends, self included.
    pub fn receivers(&self) -> &BTreeSet<ResourceId> {
        self.bidder.auctions()
    }

    /// Claim as carried on the wire. Per fragment when weighted.
    pub fn claim(&self) -> f64 {
        self.bidder.emitted_claim()
    }

    pub fn offer(&self) -> f64 {
        self.auctioneer.emitted_offer()
    }

    pub fn persistence(&self) -> f64 {
        self.schedule.persistence()
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    pub fn dummy_flag(&self) -> bool {
        self.dummy
    }

    pub fn queue_len(&self) -> usize {
        self.queue.len()
    }

    pub fn stats(&self) -> &NodeStats {
        &self.stats
    }

    pub fn demand(&self) -> f64 {
        self.bidder.max_claim()
    }

    pub fn header(&self) -> ReactHeader {
        ReactHeader {
            offer: WireValue::saturating(self.offer()),
            claim: WireValue::saturating(self.claim()),
            weight: self.config.weighted.then(|| self.bidder.weight()),
        }
    }

    /// Fix the demand at `w` (fraction of slots).
    pub fn set_demand(&mut self, w: f64) {
        self.demand = DemandSource::Nominal(w);
        self.apply_demand(w);
    }

    /// Derive the demand from the queue, measuring arrivals over `window_slots`.
    pub fn estimate_demand_from_queue(&mut self, window_slots: u64) {
        self.demand =
            DemandSource::Estimated(DemandEstimator::new(window_slots, self.config.slot_len));
    }

    pub fn set_weight(&mut self, weight: Weight) {
        self.bidder.handle(BidderEvent::SetWeight(weight));
        self.settle();
    }

    /// Nodes this node has traffic for: destinations of queued packets and
    /// neighbours addressed since they were last discovered.
    pub fn destinations(&self) -> BTreeSet<u32> {
        self.addressed
            .iter()
            .chain(self.queued_to.keys())
            .copied()
            .collect()
    }

    /// Offer a new data packet to the queue, addressed to one of
    /// `destinations` when any are given; false when it was tail-dropped.
    pub fn enqueue(&mut self, now: u64, destinations: &[u32]) -> bool {
        self.stats.arrivals += 1;
        if let DemandSource::Estimated(e) = &mut self.demand {
            e.record_enqueue(now);
        }
        if self.queue.len() >= self.config.queue_capacity {
            self.stats.overflow_drops += 1;
            return false;
        }
        let dst = destinations.choose(&mut self.rng).copied();
        if let Some(d) = dst {
            self.address(d);
            *self.queued_to.entry(d).or_default() += 1;
        }
        let packet = MacPacket {
            id: (u64::from(self.id) << 40) | self.next_packet,
            src: self.id,
            dst,
            kind: PacketKind::Data,
            payload_len: DATA_PAYLOAD,
            header: self.header(),
            retry: 0,
            enqueued_at: now,
        };
        self.next_packet += 1;
        self.queue.push_back(packet);
        true
    }

    /// Housekeeping at the start of slot `now`: neighbour and receiver
    /// timeouts, demand estimation, persistence and schedule.
    pub fn begin_slot(&mut self, now: u64) {
        let lost = self.neighbours.expire(now);
        for id in &lost {
            self.served.remove(id);
            self.confirmed.remove(id);
            self.addressed.remove(id);
        }
        if !lost.is_empty() {
            self.sync_membership();
        }
        let queued = self.queue.len();
        if let DemandSource::Estimated(e) = &mut self.demand {
            let w = e.estimate(now, queued);
            self.apply_demand(w);
        }
        self.update_persistence(now);
    }

    /// Transmit decision for slot `now`. `destinations` are the nodes a data
    /// packet may be addressed to right now.
    pub fn on_slot(&mut self, now: u64, destinations: &[u32]) -> Option<MacPacket> {
        let position = (now % u64::from(self.config.v)) as u32;
        if !self.schedule.is_scheduled(position) {
            return None;
        }
        if self.queue.is_empty() {
            // Dummies only need to reach the p_min rate, even when an eager
            // persistence is far higher.
            let p = self.schedule.persistence();
            if !self.dummy || !self.rng.gen_bool((self.config.p_min / p).min(1.0)) {
                return None;
            }
            self.stats.dummies_sent += 1;
            return Some(self.broadcast(PacketKind::Dummy, now));
        }
        if destinations.is_empty() {
            self.stats.beacons_sent += 1;
            return Some(self.broadcast(PacketKind::Beacon, now));
        }
        let old = self.queue[0].dst;
        let dst = match old.filter(|d| destinations.contains(d)) {
            Some(d) => d,
            None => {
                let d = *destinations.choose(&mut self.rng).expect("non-empty");
                if let Some(o) = old {
                    self.unqueue(o);
                }
                *self.queued_to.entry(d).or_default() += 1;
                d
            }
        };
        self.address(dst);
        let header = self.header();
        let head = self.queue.front_mut().expect("non-empty");
        head.dst = Some(dst);
        head.header = header;
        self.in_flight = true;
        self.stats.data_sent += 1;
        Some(*head)
    }

    /// Outcome of the data packet sent this slot.
    pub fn on_ack_result(&mut self, now: u64, acked: bool) -> AckResult {
        assert!(self.in_flight, "no data packet in flight");
        self.in_flight = false;
        let head = self.queue.front_mut().expect("in-flight packet is queued");
        if acked {
            if let Some(d) = head.dst {
                self.confirmed.insert(d);
            }
            let delay = (now + 1 - head.enqueued_at) as f64 * self.config.slot_len;
            let dst = head.dst;
            self.queue.pop_front();
            if let Some(d) = dst {
                self.unqueue(d);
            }
            self.stats.delivered += 1;
            self.stats.delay_count += 1;
            self.stats.delay_sum += delay;
            self.stats.delay_sum_sq += delay * delay;
            AckResult::Delivered
        } else if head.retry >= self.config.max_retries {
            let dst = head.dst;
            self.queue.pop_front();
            if let Some(d) = dst {
                self.unqueue(d);
            }
            self.stats.mac_drops += 1;
            AckResult::Dropped
        } else {
            head.retry += 1;
            AckResult::Retrying
        }
    }

    /// Ack for a data packet decoded by this node.
    pub fn make_ack(&mut self, packet: &MacPacket) -> Ack {
        self.stats.received += 1;
        Ack {
            src: self.id,
            dst: packet.src,
            packet: packet.id,
            header: self.header(),
        }
    }

    /// Any decoded transmission: refreshes the neighbour and feeds its header
    /// to the local auction pair.
    pub fn on_hear(&mut self, now: u64, heard: Heard) {
        let x = heard.from;
        if self.neighbours.hear(x, now) {
            self.discovery_until =
                now + u64::from(self.config.v) * u64::from(self.config.discovery_frames);
        }
        if heard.to == Some(self.id) && !heard.ack {
            self.served.insert(x, now);
        }
        self.sync_membership();
        self.bidder.handle(BidderEvent::Offer {
            from: ResourceId(x),
            value: heard.header.offer.decode(),
        });
        self.auctioneer.handle(AuctioneerEvent::Claim {
            from: DemandId(x),
            value: heard.header.claim.decode(),
            weight: heard.header.weight,
        });
        self.settle();
    }

    fn address(&mut self, dst: u32) {
        if self.addressed.insert(dst) {
            self.sync_membership();
        }
    }

    fn unqueue(&mut self, dst: u32) {
        if let Some(c) = self.queued_to.get_mut(&dst) {
            *c -= 1;
            if *c == 0 {
                self.queued_to.remove(&dst);
            }
        }
    }

    fn broadcast(&self, kind: PacketKind, now: u64) -> MacPacket {
        MacPacket {
            id: u64::MAX,
            src: self.id,
            dst: None,
            kind,
            payload_len: 0,
            header: self.header(),
            retry: 0,
            enqueued_at: now,
        }
    }

    fn apply_demand(&mut self, w: f64) {
        if w != self.bidder.max_claim() {
            self.bidder.handle(BidderEvent::SetDemand(w));
            self.settle();
        }
    }

    fn update_persistence(&mut self, now: u64) {
        let weight = if self.config.weighted {
            self.bidder.weight().get()
        } else {
            1
        };
        let raw = compute_persistence(
            self.claim(),
            self.bidder.min_offer(),
            weight,
            self.config.persistence_mode,
        );
        let fragments: u32 = self.auctioneer.fragments().iter().map(|&(_, m)| m).sum();
        let ctx = OverrideContext {
            isolated: self.neighbours.is_empty(),
            discovering: now < self.discovery_until || self.awaiting_receiver(),
            sum_adjacent_claims: self.auctioneer.claimed_total(),
            capacity: RECEIVE_CAPACITY,
            slack: f64::from(fragments) * 0.5 / 255.0 + 1e-9,
        };
        let out = apply_overrides(raw, &ctx, &self.config);
        self.dummy = out.dummy;
        let position = (now % u64::from(self.config.v)) as u32;
        if position == 0 {
            self.schedule.begin_frame(out.p, &mut self.rng);
        } else {
            self.schedule
                .set_persistence(out.p, position, &mut self.rng);
        }
    }

    /// A MAC receiver that has not counted us yet offers as if we were
    /// absent; trusting that offer at high persistence can jam the very
    /// frames it needs to decode.
    fn awaiting_receiver(&self) -> bool {
        self.config.receiver_mode == ReceiverMode::Mac
            && self
                .bidder
                .auctions()
                .iter()
                .any(|j| j.0 != self.id && !self.confirmed.contains(&j.0))
    }

    /// Bring bidder auctions and auctioneer bidders in line with the
    /// neighbour table and receiver mode.
    fn sync_membership(&mut self) {
        let own = self.id;
        let (receivers, senders): (BTreeSet<u32>, BTreeSet<u32>) = match self.config.receiver_mode {
            ReceiverMode::Physical => {
                let all: BTreeSet<u32> = self.neighbours.ids().collect();
                (all.clone(), all)
            }
            ReceiverMode::Mac => (
                self.destinations()
                    .into_iter()
                    .filter(|&j| self.neighbours.contains(j))
                    .collect(),
                self.served
                    .keys()
                    .copied()
                    .filter(|&i| self.neighbours.contains(i))
                    .collect(),
            ),
        };
        let current: Vec<ResourceId> = self.bidder.auctions().iter().copied().collect();
        for j in current {
            if j.0 != own && !receivers.contains(&j.0) {
                self.bidder.handle(BidderEvent::Leave(j));
            }
        }
        for j in receivers {
            if !self.bidder.auctions().contains(&ResourceId(j)) {
                self.bidder.handle(BidderEvent::Join(ResourceId(j)));
            }
        }
        let current: Vec<DemandId> = self.auctioneer.bidders().iter().copied().collect();
        for i in current {
            if i.0 != own && !senders.contains(&i.0) {
                self.auctioneer.handle(AuctioneerEvent::Leave(i));
            }
        }
        for i in senders {
            if !self.auctioneer.bidders().contains(&DemandId(i)) {
                self.auctioneer.handle(AuctioneerEvent::Join(DemandId(i)));
            }
        }
        self.settle();
    }

    /// Exchange claim and offer between the local bidder and auctioneer until
    /// neither changes.
    fn settle(&mut self) {
        for _ in 0..64 {
            let to_auction = self.auctioneer.handle(AuctioneerEvent::Claim {
                from: DemandId(self.id),
                value: self.bidder.emitted_claim(),
                weight: Some(self.bidder.weight()),
            });
            let to_bidder = self.bidder.handle(BidderEvent::Offer {
                from: ResourceId(self.id),
                value: self.auctioneer.emitted_offer(),
            });
            if to_auction.is_none() && to_bidder.is_none() {
                return;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::PersistenceMode;

    fn node(id: u32, config: NodeConfig) -> NodeRuntime {
        NodeRuntime::new(id, config, 7).unwrap()
    }

    fn heard(from: u32, to: Option<u32>, offer: f64, claim: f64) -> Heard {
        Heard {
            from,
            to,
            header: ReactHeader {
                offer: WireValue::saturating(offer),
                claim: WireValue::saturating(claim),
                weight: None,
            },
            ack: false,
        }
    }

    /// Run slots until the node transmits a data packet.
    fn send_one(n: &mut NodeRuntime, now: &mut u64, to: &[u32]) -> MacPacket {
        loop {
            n.begin_slot(*now);
            let out = n.on_slot(*now, to);
            *now += 1;
            if let Some(p) = out {
                if p.kind == PacketKind::Data {
                    return p;
                }
            }
            assert!(*now < 1_000_000, "node never transmitted");
        }
    }

    #[test]
    fn isolated_node_claims_its_demand_and_caps_persistence() {
        let mut n = node(0, NodeConfig::default());
        n.set_demand(0.3);
        n.begin_slot(0);
        assert!((n.claim() - 0.3).abs() <= 0.5 / 255.0);
        assert_eq!(n.persistence(), 0.05);
        assert_eq!(n.receivers(), &BTreeSet::from([ResourceId(0)]));
    }

    #[test]
    fn idle_node_never_transmits() {
        let mut n = node(0, NodeConfig::default());
        n.on_hear(0, heard(1, None, 1.0, 0.2));
        for t in 0..5_000 {
            n.begin_slot(t);
            assert!(n.on_slot(t, &[1]).is_none());
            if t % 100 == 0 {
                n.on_hear(t, heard(1, None, 1.0, 0.2));
            }
        }
    }

    #[test]
    fn physical_mode_attends_every_neighbour() {
        let cfg = NodeConfig {
            receiver_mode: ReceiverMode::Physical,
            ..NodeConfig::default()
        };
        let mut n = node(0, cfg);
        n.on_hear(0, heard(1, None, 0.5, 0.1));
        n.on_hear(0, heard(2, None, 0.5, 0.1));
        let ids: Vec<u32> = n.receivers().iter().map(|r| r.0).collect();
        assert_eq!(ids, vec![0, 1, 2]);
        assert_eq!(n.auctioneer().bidders().len(), 3);
    }

    #[test]
    fn mac_mode_attends_only_destinations() {
        let mut n = node(0, NodeConfig::default());
        n.set_demand(0.5);
        n.on_hear(0, heard(1, None, 0.5, 0.1));
        n.on_hear(0, heard(2, None, 0.5, 0.1));
        assert_eq!(n.receivers().len(), 1);
        n.enqueue(0, &[]);
        let mut now = 0;
        let p = send_one(&mut n, &mut now, &[1]);
        assert_eq!(p.dst, Some(1));
        let ids: Vec<u32> = n.receivers().iter().map(|r| r.0).collect();
        assert_eq!(ids, vec![0, 1]);
        // Node 2's auction is not attended, so its low offer does not bind.
        n.on_ack_result(now, true);
        n.on_hear(now, heard(2, None, 0.05, 0.1));
        n.on_hear(now, heard(1, Some(0), 0.3, 0.1));
        assert!((n.claim() - 0.3).abs() <= 0.5 / 255.0);
    }

    #[test]
    fn unacknowledged_receiver_holds_persistence_at_default() {
        let mut n = node(0, NodeConfig::default());
        n.set_demand(0.5);
        n.on_hear(0, heard(1, None, 1.0, 0.0));
        n.enqueue(0, &[1]);
        n.enqueue(0, &[1]);
        let mut now = 200;
        send_one(&mut n, &mut now, &[1]);
        n.on_ack_result(now - 1, false);
        n.begin_slot(now);
        assert_eq!(n.persistence(), 0.05);
        let p = send_one(&mut n, &mut now, &[1]);
        assert_eq!(p.dst, Some(1));
        n.on_ack_result(now - 1, true);
        n.begin_slot(now);
        assert!(n.persistence() > 0.9);
    }

    #[test]
    fn addressed_receivers_stay_until_the_neighbour_is_lost() {
        let mut n = node(0, NodeConfig::default());
        n.set_demand(0.5);
        n.on_hear(0, heard(1, None, 1.0, 0.0));
        n.enqueue(0, &[1]);
        let mut now = 0;
        send_one(&mut n, &mut now, &[1]);
        n.on_ack_result(now - 1, true);
        // Well past the neighbour timeout with an empty queue, but node 1
        // keeps being heard.
        for t in (now..now + 2000).step_by(100) {
            n.on_hear(t, heard(1, None, 1.0, 0.0));
            n.begin_slot(t);
        }
        assert!(n.receivers().contains(&ResourceId(1)));
        n.begin_slot(now + 3000);
        assert!(!n.receivers().contains(&ResourceId(1)));
    }

    #[test]
    fn neighbour_timeout_fires_leave_events() {
        let cfg = NodeConfig {
            receiver_mode: ReceiverMode::Physical,
            ..NodeConfig::default()
        };
        let mut n = node(0, cfg);
        n.set_demand(1.0);
        n.on_hear(0, heard(1, None, 0.2, 0.5));
        assert!((n.claim() - 0.2).abs() < 1e-9 + 0.5 / 255.0);
        n.begin_slot(625);
        assert!(n.neighbours().contains(1));
        // 0.6 s of silence with a 0.5 s timeout.
        n.begin_slot(750);
        assert!(!n.neighbours().contains(1));
        assert_eq!(n.receivers().len(), 1);
        assert_eq!(n.claim(), 1.0);
    }

    #[test]
    fn discovery_window_caps_for_one_frame() {
        let cfg = NodeConfig {
            persistence_mode: PersistenceMode::Lazy,
            receiver_mode: ReceiverMode::Physical,
            ..NodeConfig::default()
        };
        let mut n = node(0, cfg);
        n.set_demand(0.4);
        n.on_hear(10, heard(1, None, 1.0, 0.1));
        n.begin_slot(50);
        assert_eq!(n.persistence(), 0.05);
        n.on_hear(109, heard(1, None, 1.0, 0.1));
        n.begin_slot(110);
        assert!((n.persistence() - 0.4).abs() <= 0.5 / 255.0);
    }

    fn overloaded_dummies(mode: PersistenceMode) -> u32 {
        let cfg = NodeConfig {
            receiver_mode: ReceiverMode::Physical,
            persistence_mode: mode,
            ..NodeConfig::default()
        };
        let mut n = node(0, cfg);
        let mut sent = 0;
        for t in 0..10_200 {
            if t % 100 == 0 {
                for x in 1..=3 {
                    n.on_hear(t, heard(x, None, 1.0, 0.4));
                }
            }
            n.begin_slot(t);
            if let Some(p) = n.on_slot(t, &[1, 2, 3]) {
                assert_eq!(p.kind, PacketKind::Dummy);
                assert_eq!(p.dst, None);
                if t >= 200 {
                    sent += 1;
                }
            }
        }
        sent
    }

    #[test]
    fn dummy_rate_is_p_min_in_both_modes() {
        assert_eq!(overloaded_dummies(PersistenceMode::Lazy), 100);
        let eager = overloaded_dummies(PersistenceMode::Eager);
        assert!((60..=140).contains(&eager), "{eager}");
    }

    #[test]
    fn overload_forces_dummies() {
        let cfg = NodeConfig {
            persistence_mode: PersistenceMode::Lazy,
            receiver_mode: ReceiverMode::Physical,
            ..NodeConfig::default()
        };
        let mut n = node(0, cfg);
        for x in 1..=3 {
            n.on_hear(0, heard(x, None, 1.0, 0.4));
        }
        n.begin_slot(200);
        assert!(n.dummy_flag());
        assert_eq!(n.persistence(), 0.01);
    }

    #[test]
    fn retries_then_drop() {
        let cfg = NodeConfig {
            persistence_mode: PersistenceMode::Lazy,
            ..NodeConfig::default()
        };
        let mut n = node(0, cfg);
        n.set_demand(1.0);
        n.enqueue(0, &[1]);
        let mut now = 0;
        for retry in 0..=10u8 {
            let p = send_one(&mut n, &mut now, &[1]);
            assert_eq!(p.retry, retry);
            let r = n.on_ack_result(now, false);
            if retry < 10 {
                assert_eq!(r, AckResult::Retrying);
            } else {
                assert_eq!(r, AckResult::Dropped);
            }
        }
        assert_eq!(n.queue_len(), 0);
        assert_eq!(n.stats().mac_drops, 1);
    }

    #[test]
    fn ack_records_delay() {
        let mut n = node(0, NodeConfig::default());
        n.set_demand(1.0);
        n.enqueue(3, &[1]);
        let mut now = 3;
        let p = send_one(&mut n, &mut now, &[1]);
        assert_eq!(n.on_ack_result(now - 1, true), AckResult::Delivered);
        assert_eq!(n.stats().delivered, 1);
        let expected = (now - p.enqueued_at) as f64 * 800e-6;
        assert!((n.stats().delay_mean().unwrap() - expected).abs() < 1e-12);
        assert_eq!(n.stats().delay_variance(), Some(0.0));
    }

    #[test]
    fn beacon_without_destinations() {
        let mut n = node(0, NodeConfig::default());
        n.set_demand(1.0);
        n.enqueue(0, &[1]);
        let mut now = 0;
        let p = loop {
            n.begin_slot(now);
            if let Some(p) = n.on_slot(now, &[]) {
                break p;
            }
            now += 1;
        };
        assert_eq!(p.kind, PacketKind::Beacon);
        assert_eq!(n.queue_len(), 1);
    }

    #[test]
    fn tail_drop_at_capacity() {
        let cfg = NodeConfig {
            queue_capacity: 2,
            ..NodeConfig::default()
        };
        let mut n = node(0, cfg);
        assert!(n.enqueue(0, &[]));
        assert!(n.enqueue(0, &[]));
        assert!(!n.enqueue(0, &[]));
        let s = n.stats();
        assert_eq!((s.arrivals, s.overflow_drops), (3, 1));
    }

    #[test]
    fn weighted_header_and_persistence() {
        let cfg = NodeConfig {
            weighted: true,
            persistence_mode: PersistenceMode::Lazy,
            ..NodeConfig::default()
        };
        let mut n = node(0, cfg);
        n.set_weight(Weight::new(3).unwrap());
        n.set_demand(0.3);
        assert_eq!(n.header().weight.map(Weight::get), Some(3));
        // Per-fragment claim 0.1; persistence covers all three fragments.
        assert!((n.claim() - 0.1).abs() <= 0.5 / 255.0 + 1e-9);
        n.on_hear(0, heard(1, None, 1.0, 0.0));
        n.begin_slot(200);
        assert!((n.persistence() - 0.3).abs() <= 3.0 * 0.5 / 255.0 + 1e-9);
    }
}
