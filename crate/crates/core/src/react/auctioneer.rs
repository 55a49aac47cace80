use std::collections::{BTreeMap, BTreeSet};

use crate::allocation::{DemandId, ResourceId};

use super::wire::GRID_STEPS;
use super::{EngineConfig, MessageKind, ReactMessage, Weight};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AuctioneerEvent {
    SetCapacity(f64),
    Claim {
        from: DemandId,
        value: f64,
        weight: Option<Weight>,
    },
    Join(DemandId),
    Leave(DemandId),
}

/// The offer fixed point over `(claim, multiplicity)` pairs.
///
/// Bidders whose claim falls strictly below the running offer are moved into the
/// constrained set and their claims subtracted from what is available; the rest
/// share the remainder equally. When every bidder ends up constrained the offer
/// is the remainder plus the largest claim. An empty bidder set offers the whole
/// capacity.
pub fn compute_offer(capacity: f64, claims: &[(f64, u32)]) -> f64 {
    offer_fixed_point(capacity, claims, |claim, offer| claim < offer)
}

/// [`compute_offer`] with the "strictly below" test taken on the 8-bit wire
/// grid. Claims arrive quantized, so a bidder bottlenecked here reports the
/// rounded offer; comparing against the unrounded offer would flip it in and
/// out of the constrained set forever.
pub fn compute_quantized_offer(capacity: f64, claims: &[(f64, u32)]) -> f64 {
    let grid = |x: f64| (x * GRID_STEPS).round();
    offer_fixed_point(capacity, claims, |claim, offer| grid(claim) < grid(offer))
}

fn offer_fixed_point(
    capacity: f64,
    claims: &[(f64, u32)],
    below: impl Fn(f64, f64) -> bool,
) -> f64 {
    if claims.is_empty() {
        return capacity;
    }
    let mut constrained = vec![false; claims.len()];
    let mut available = capacity;
    let mut open: u64 = claims.iter().map(|&(_, m)| u64::from(m)).sum();
    loop {
        if open == 0 {
            let max = claims
                .iter()
                .map(|&(c, _)| c)
                .fold(f64::NEG_INFINITY, f64::max);
            return available + max;
        }
        let offer = available / open as f64;
        let mut done = true;
        for (k, &(claim, mult)) in claims.iter().enumerate() {
            if !constrained[k] && below(claim, offer) {
                constrained[k] = true;
                available -= claim * f64::from(mult);
                open -= u64::from(mult);
                done = false;
            }
        }
        if done {
            return offer;
        }
    }
}

/// Auctioneer for one resource.
#[derive(Clone, Debug, PartialEq)]
pub struct Auctioneer {
    id: ResourceId,
    capacity: f64,
    bidders: BTreeSet<DemandId>,
    claims: BTreeMap<DemandId, (f64, Weight)>,
    offer: f64,
    last_sent: Option<(f64, BTreeSet<DemandId>)>,
    config: EngineConfig,
}

impl Auctioneer {
    pub fn new(id: ResourceId, config: EngineConfig) -> Self {
        let mut a = Self {
            id,
            capacity: 0.0,
            bidders: BTreeSet::new(),
            claims: BTreeMap::new(),
            offer: 0.0,
            last_sent: None,
            config,
        };
        a.update_offer();
        a
    }

    pub fn id(&self) -> ResourceId {
        self.id
    }

    pub fn capacity(&self) -> f64 {
        self.capacity
    }

    pub fn bidders(&self) -> &BTreeSet<DemandId> {
        &self.bidders
    }

    pub fn offer(&self) -> f64 {
        self.offer
    }

    pub fn emitted_offer(&self) -> f64 {
        self.config.emit_value(self.offer)
    }

    /// Claim recorded for `i`; bidders that have not claimed yet count as zero.
    pub fn claim_of(&self, i: DemandId) -> f64 {
        self.claims.get(&i).map_or(0.0, |c| c.0)
    }

    /// Effective fragment claims the offer is computed over: each bidder
    /// contributes its weight's worth of fragments (weight 1 when unweighted).
    pub fn fragments(&self) -> Vec<(f64, u32)> {
        self.bidders
            .iter()
            .map(|i| {
                let (claim, weight) = self.claims.get(i).copied().unwrap_or((0.0, Weight::ONE));
                let mult = if self.config.weighted {
                    weight.get()
                } else {
                    1
                };
                (claim, mult)
            })
            .collect()
    }

    /// Total consumption the current claims would place on this resource.
    pub fn claimed_total(&self) -> f64 {
        self.fragments()
            .iter()
            .map(|&(c, m)| c * f64::from(m))
            .sum()
    }

    pub fn update_offer(&mut self) -> f64 {
        let fragments = self.fragments();
        self.offer = if self.config.quantize {
            compute_quantized_offer(self.capacity, &fragments)
        } else {
            compute_offer(self.capacity, &fragments)
        };
        self.offer
    }

    pub fn handle(&mut self, event: AuctioneerEvent) -> Option<ReactMessage> {
        match event {
            AuctioneerEvent::SetCapacity(c) => self.capacity = c.max(0.0),
            AuctioneerEvent::Claim {
                from,
                value,
                weight,
            } => {
                self.claims
                    .insert(from, (value, weight.unwrap_or(Weight::ONE)));
            }
            AuctioneerEvent::Join(i) => {
                self.bidders.insert(i);
            }
            AuctioneerEvent::Leave(i) => {
                self.bidders.remove(&i);
                self.claims.remove(&i);
            }
        }
        self.update_offer();
        self.emit(false)
    }

    pub fn announce(&mut self) -> ReactMessage {
        self.emit(true).expect("forced emission")
    }

    /// Overwrite the claim table; used to start from arbitrary state.
    pub fn set_stale_claims(&mut self, claims: BTreeMap<DemandId, (f64, Weight)>) {
        self.claims = claims;
        self.update_offer();
    }

    fn emit(&mut self, force: bool) -> Option<ReactMessage> {
        let value = self.config.emit_value(self.offer);
        let unchanged = self
            .last_sent
            .as_ref()
            .is_some_and(|(v, members)| *v == value && *members == self.bidders);
        if unchanged && !force && !self.config.always_send {
            return None;
        }
        self.last_sent = Some((value, self.bidders.clone()));
        Some(ReactMessage {
            kind: MessageKind::Offer,
            sender: self.id.0,
            value,
            weight: None,
        })
    }
}
