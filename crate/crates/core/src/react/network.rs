//! Runs a full REACT instance for an [`AllocationProblem`] over point-to-point
//! links with random bounded delays.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::allocation::{Allocation, AllocationProblem, DemandId, ResourceId};

use super::{
    compute_claim, compute_offer, compute_quantized_offer, Auctioneer, AuctioneerEvent, Bidder,
    BidderEvent, EngineConfig, MessageKind, ReactMessage, Weight,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Endpoint {
    Bidder(DemandId),
    Auctioneer(ResourceId),
}

/// How a link treats a message sent while an earlier one is still in flight.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LinkModel {
    /// Every message is delivered, in order.
    Fifo,
    /// The newer message replaces the undelivered one, keeping its slot in the
    /// delivery order. Models values piggybacked on the next outgoing packet.
    #[default]
    Latest,
}

#[derive(Clone, Debug, PartialEq)]
struct Pending {
    at: u64,
    seq: u64,
    from: Endpoint,
    to: Endpoint,
    msg: ReactMessage,
}

impl Eq for Pending {}

impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Pending {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.at, self.seq).cmp(&(other.at, other.seq))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunOutcome {
    pub deliveries: u64,
    /// No message left in flight.
    pub quiescent: bool,
}

#[derive(Clone, Debug)]
pub struct AuctionNetwork {
    bidders: BTreeMap<DemandId, Bidder>,
    auctioneers: BTreeMap<ResourceId, Auctioneer>,
    queue: BinaryHeap<Reverse<Pending>>,
    links: LinkModel,
    /// Newest payload per link awaiting delivery, in [`LinkModel::Latest`].
    latest: BTreeMap<(Endpoint, Endpoint), ReactMessage>,
    link_clock: BTreeMap<(Endpoint, Endpoint), u64>,
    now: u64,
    seq: u64,
    deliveries: u64,
    emissions: u64,
    max_delay: u64,
    rng: ChaCha8Rng,
    config: EngineConfig,
}

impl AuctionNetwork {
    /// Build the state machines for `problem` and queue the setup traffic.
    /// Message delays are drawn uniformly from `1..=max_delay` ticks.
    pub fn new(
        problem: &AllocationProblem,
        config: EngineConfig,
        seed: u64,
        max_delay: u64,
    ) -> Self {
        Self::with_links(problem, config, seed, max_delay, LinkModel::default())
    }

    pub fn with_links(
        problem: &AllocationProblem,
        config: EngineConfig,
        seed: u64,
        max_delay: u64,
        links: LinkModel,
    ) -> Self {
        let mut net = Self {
            bidders: BTreeMap::new(),
            auctioneers: BTreeMap::new(),
            queue: BinaryHeap::new(),
            links,
            latest: BTreeMap::new(),
            link_clock: BTreeMap::new(),
            now: 0,
            seq: 0,
            deliveries: 0,
            emissions: 0,
            max_delay: max_delay.max(1),
            rng: ChaCha8Rng::seed_from_u64(seed),
            config,
        };
        // Memberships are installed silently; each party then announces once.
        for j in problem.resource_ids() {
            let capacity = problem.capacity(j).expect("listed resource");
            let mut a = Auctioneer::new(j, config);
            a.handle(AuctioneerEvent::SetCapacity(capacity));
            for i in problem.bidders(j) {
                a.handle(AuctioneerEvent::Join(i));
            }
            net.auctioneers.insert(j, a);
        }
        for d in problem.demands() {
            let mut b = Bidder::new(d.id, config);
            if config.weighted {
                // Weights above the wire limit saturate at the largest nibble.
                let w = Weight::new(d.weight.min(Weight::MAX)).expect("clamped weight");
                b.handle(BidderEvent::SetWeight(w));
            }
            b.handle(BidderEvent::SetDemand(d.magnitude));
            for &j in &d.resources {
                b.handle(BidderEvent::Join(j));
            }
            net.bidders.insert(d.id, b);
        }
        net.announce_all();
        net
    }

    pub fn bidder(&self, i: DemandId) -> Option<&Bidder> {
        self.bidders.get(&i)
    }

    pub fn auctioneer(&self, j: ResourceId) -> Option<&Auctioneer> {
        self.auctioneers.get(&j)
    }

    pub fn deliveries(&self) -> u64 {
        self.deliveries
    }

    /// Messages sent so far; one emission reaches every current peer.
    pub fn emissions(&self) -> u64 {
        self.emissions
    }

    pub fn in_flight(&self) -> usize {
        self.queue.len()
    }

    /// Bidder `i` starts consuming resource `j`.
    pub fn link(&mut self, i: DemandId, j: ResourceId) {
        self.bidder_event(i, BidderEvent::Join(j));
        self.auctioneer_event(j, AuctioneerEvent::Join(i));
    }

    pub fn unlink(&mut self, i: DemandId, j: ResourceId) {
        self.bidder_event(i, BidderEvent::Leave(j));
        self.auctioneer_event(j, AuctioneerEvent::Leave(i));
    }

    pub fn set_demand(&mut self, i: DemandId, w: f64) {
        self.bidder_event(i, BidderEvent::SetDemand(w));
    }

    pub fn set_capacity(&mut self, j: ResourceId, c: f64) {
        self.auctioneer_event(j, AuctioneerEvent::SetCapacity(c));
    }

    /// Replace every stored offer and claim with random garbage and make all
    /// parties re-announce, giving an arbitrary initial state.
    pub fn scramble(&mut self, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let resources: Vec<ResourceId> = self.auctioneers.keys().copied().collect();
        let demands: Vec<DemandId> = self.bidders.keys().copied().collect();
        let quantize = self.config.quantize;
        let draw = |rng: &mut ChaCha8Rng| {
            let x: f64 = rng.gen();
            if quantize {
                super::quantize(x)
            } else {
                x
            }
        };
        for b in self.bidders.values_mut() {
            let offers = resources.iter().map(|&j| (j, draw(&mut rng))).collect();
            b.set_stale_offers(offers);
        }
        for a in self.auctioneers.values_mut() {
            let claims = demands
                .iter()
                .map(|&i| (i, (draw(&mut rng), Weight::ONE)))
                .collect();
            a.set_stale_claims(claims);
        }
        self.announce_all();
    }

    fn announce_all(&mut self) {
        let demands: Vec<DemandId> = self.bidders.keys().copied().collect();
        for i in demands {
            let msg = self.bidders.get_mut(&i).expect("listed").announce();
            self.dispatch(Endpoint::Bidder(i), msg);
        }
        let resources: Vec<ResourceId> = self.auctioneers.keys().copied().collect();
        for j in resources {
            let msg = self.auctioneers.get_mut(&j).expect("listed").announce();
            self.dispatch(Endpoint::Auctioneer(j), msg);
        }
    }

    /// Deliver messages until none remain or `limit` deliveries have happened.
    pub fn run(&mut self, limit: u64) -> RunOutcome {
        let start = self.deliveries;
        while self.deliveries - start < limit {
            let Some(Reverse(mut p)) = self.queue.pop() else {
                break;
            };
            if self.links == LinkModel::Latest {
                p.msg = self
                    .latest
                    .remove(&(p.from, p.to))
                    .expect("pending payload");
            }
            self.now = p.at;
            self.deliveries += 1;
            match (p.to, p.msg.kind) {
                (Endpoint::Bidder(i), MessageKind::Offer) => {
                    let from = ResourceId(p.msg.sender);
                    self.bidder_event(
                        i,
                        BidderEvent::Offer {
                            from,
                            value: p.msg.value,
                        },
                    );
                }
                (Endpoint::Auctioneer(j), MessageKind::Claim) => {
                    let from = DemandId(p.msg.sender);
                    self.auctioneer_event(
                        j,
                        AuctioneerEvent::Claim {
                            from,
                            value: p.msg.value,
                            weight: p.msg.weight,
                        },
                    );
                }
                _ => unreachable!("messages are routed by kind"),
            }
        }
        RunOutcome {
            deliveries: self.deliveries - start,
            quiescent: self.queue.is_empty(),
        }
    }

    /// Internal claims of every bidder (per fragment in weighted mode).
    pub fn claims(&self) -> Allocation {
        self.bidders.iter().map(|(&i, b)| (i, b.claim())).collect()
    }

    /// Claims as last put on the wire.
    pub fn emitted_claims(&self) -> Allocation {
        self.bidders
            .iter()
            .map(|(&i, b)| (i, b.emitted_claim()))
            .collect()
    }

    pub fn offers(&self) -> BTreeMap<ResourceId, f64> {
        self.auctioneers
            .iter()
            .map(|(&j, a)| (j, a.offer()))
            .collect()
    }

    /// Re-derive every claim and offer from stored inputs and compare with the
    /// incremental state.
    pub fn local_invariants_hold(&self) -> bool {
        let bidders_ok = self.bidders.values().all(|b| {
            let cap = if self.config.weighted {
                b.max_claim() / f64::from(b.weight().get())
            } else {
                b.max_claim()
            };
            compute_claim(cap, b.auctions(), b.offers()) == b.claim()
        });
        let auctions_ok = self.auctioneers.values().all(|a| {
            let offer = if self.config.quantize {
                compute_quantized_offer(a.capacity(), &a.fragments())
            } else {
                compute_offer(a.capacity(), &a.fragments())
            };
            offer == a.offer() && offer >= 0.0
        });
        bidders_ok && auctions_ok
    }

    fn bidder_event(&mut self, i: DemandId, event: BidderEvent) {
        let Some(b) = self.bidders.get_mut(&i) else {
            return;
        };
        if let Some(msg) = b.handle(event) {
            self.dispatch(Endpoint::Bidder(i), msg);
        }
    }

    fn auctioneer_event(&mut self, j: ResourceId, event: AuctioneerEvent) {
        let Some(a) = self.auctioneers.get_mut(&j) else {
            return;
        };
        if let Some(msg) = a.handle(event) {
            self.dispatch(Endpoint::Auctioneer(j), msg);
        }
    }

    fn dispatch(&mut self, from: Endpoint, msg: ReactMessage) {
        self.emissions += 1;
        let targets: Vec<Endpoint> = match from {
            Endpoint::Bidder(i) => self.bidders[&i]
                .auctions()
                .iter()
                .map(|&j| Endpoint::Auctioneer(j))
                .collect(),
            Endpoint::Auctioneer(j) => self.auctioneers[&j]
                .bidders()
                .iter()
                .map(|&i| Endpoint::Bidder(i))
                .collect(),
        };
        for to in targets {
            if self.links == LinkModel::Latest {
                if let Some(pending) = self.latest.get_mut(&(from, to)) {
                    *pending = msg;
                    continue;
                }
                self.latest.insert((from, to), msg);
            }
            let delay = self.rng.gen_range(1..=self.max_delay);
            let clock = self.link_clock.entry((from, to)).or_insert(0);
            let at = (self.now + delay).max(*clock);
            *clock = at;
            self.seq += 1;
            self.queue.push(Reverse(Pending {
                at,
                seq: self.seq,
                from,
                to,
                msg,
            }));
        }
    }
}
