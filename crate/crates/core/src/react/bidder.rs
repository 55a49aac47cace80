use std::collections::{BTreeMap, BTreeSet};

use crate::allocation::{DemandId, ResourceId};

use super::{EngineConfig, MessageKind, ReactMessage, Weight};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BidderEvent {
    SetDemand(f64),
    SetWeight(Weight),
    Offer { from: ResourceId, value: f64 },
    Join(ResourceId),
    Leave(ResourceId),
}

/// `claim = min({offers[j] : j ∈ R_i}, cap)`. Auctions without a received
/// offer contribute nothing.
pub fn compute_claim(
    cap: f64,
    auctions: &BTreeSet<ResourceId>,
    offers: &BTreeMap<ResourceId, f64>,
) -> f64 {
    auctions
        .iter()
        .filter_map(|j| offers.get(j))
        .fold(cap, |acc, &o| acc.min(o))
}

/// Bidder for one demand.
#[derive(Clone, Debug, PartialEq)]
pub struct Bidder {
    id: DemandId,
    max_claim: f64,
    weight: Weight,
    auctions: BTreeSet<ResourceId>,
    offers: BTreeMap<ResourceId, f64>,
    claim: f64,
    last_sent: Option<(f64, BTreeSet<ResourceId>)>,
    config: EngineConfig,
}

impl Bidder {
    pub fn new(id: DemandId, config: EngineConfig) -> Self {
        Self {
            id,
            max_claim: 0.0,
            weight: Weight::ONE,
            auctions: BTreeSet::new(),
            offers: BTreeMap::new(),
            claim: 0.0,
            last_sent: None,
            config,
        }
    }

    pub fn id(&self) -> DemandId {
        self.id
    }

    pub fn max_claim(&self) -> f64 {
        self.max_claim
    }

    pub fn weight(&self) -> Weight {
        self.weight
    }

    pub fn auctions(&self) -> &BTreeSet<ResourceId> {
        &self.auctions
    }

    pub fn offers(&self) -> &BTreeMap<ResourceId, f64> {
        &self.offers
    }

    pub fn offer_from(&self, j: ResourceId) -> Option<f64> {
        self.offers.get(&j).copied()
    }

    /// Current claim. In weighted mode this is the per-fragment claim.
    pub fn claim(&self) -> f64 {
        self.claim
    }

    /// Claim as it would appear on the wire.
    pub fn emitted_claim(&self) -> f64 {
        self.config.emit_value(self.claim)
    }

    /// Smallest offer among the auctions this bidder attends, if any arrived.
    pub fn min_offer(&self) -> Option<f64> {
        self.auctions
            .iter()
            .filter_map(|j| self.offers.get(j))
            .copied()
            .reduce(f64::min)
    }

    fn cap(&self) -> f64 {
        if self.config.weighted {
            self.max_claim / f64::from(self.weight.get())
        } else {
            self.max_claim
        }
    }

    /// Recompute the claim from stored offers.
    pub fn update_claim(&mut self) -> f64 {
        self.claim = compute_claim(self.cap(), &self.auctions, &self.offers);
        self.claim
    }

    pub fn handle(&mut self, event: BidderEvent) -> Option<ReactMessage> {
        match event {
            BidderEvent::SetDemand(w) => self.max_claim = w.max(0.0),
            BidderEvent::SetWeight(w) => self.weight = w,
            BidderEvent::Offer { from, value } => {
                self.offers.insert(from, value);
            }
            BidderEvent::Join(j) => {
                self.auctions.insert(j);
            }
            BidderEvent::Leave(j) => {
                self.auctions.remove(&j);
            }
        }
        self.update_claim();
        self.emit(false)
    }

    /// Emit the current claim regardless of suppression.
    pub fn announce(&mut self) -> ReactMessage {
        self.emit(true).expect("forced emission")
    }

    /// Overwrite the stored offer table; used to start from arbitrary state.
    pub fn set_stale_offers(&mut self, offers: BTreeMap<ResourceId, f64>) {
        self.offers = offers;
        self.update_claim();
    }

    fn emit(&mut self, force: bool) -> Option<ReactMessage> {
        let value = self.config.emit_value(self.claim);
        let unchanged = self
            .last_sent
            .as_ref()
            .is_some_and(|(v, members)| *v == value && *members == self.auctions);
        if unchanged && !force && !self.config.always_send {
            return None;
        }
        self.last_sent = Some((value, self.auctions.clone()));
        Some(ReactMessage {
            kind: MessageKind::Claim,
            sender: self.id.0,
            value,
            weight: self.config.weighted.then_some(self.weight),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bidder(w: f64) -> Bidder {
        let mut b = Bidder::new(DemandId(0), EngineConfig::exact());
        b.handle(BidderEvent::SetDemand(w));
        b
    }

    fn offer(b: &mut Bidder, j: u32, v: f64) -> Option<ReactMessage> {
        b.handle(BidderEvent::Offer {
            from: ResourceId(j),
            value: v,
        })
    }

    #[test]
    fn claim_is_min_of_offers_and_demand() {
        let mut b = bidder(0.4);
        b.handle(BidderEvent::Join(ResourceId(1)));
        b.handle(BidderEvent::Join(ResourceId(2)));
        offer(&mut b, 1, 0.3);
        offer(&mut b, 2, 0.5);
        assert_eq!(b.claim(), 0.3);

        let mut b = bidder(0.2);
        b.handle(BidderEvent::Join(ResourceId(1)));
        b.handle(BidderEvent::Join(ResourceId(2)));
        offer(&mut b, 1, 0.3);
        offer(&mut b, 2, 0.5);
        assert_eq!(b.claim(), 0.2);
    }

    #[test]
    fn no_auctions_claims_full_demand() {
        let mut b = bidder(0.7);
        assert_eq!(b.update_claim(), 0.7);
    }

    #[test]
    fn join_without_offer_leaves_claim_unchanged() {
        let mut b = bidder(0.5);
        b.handle(BidderEvent::Join(ResourceId(1)));
        offer(&mut b, 1, 0.3);
        assert_eq!(b.claim(), 0.3);
        b.handle(BidderEvent::Join(ResourceId(2)));
        assert_eq!(b.claim(), 0.3);
        offer(&mut b, 2, 0.1);
        assert_eq!(b.claim(), 0.1);
    }

    #[test]
    fn offers_from_unattended_auctions_are_stored_but_ignored() {
        let mut b = bidder(0.5);
        offer(&mut b, 3, 0.1);
        assert_eq!(b.claim(), 0.5);
        assert_eq!(b.offer_from(ResourceId(3)), Some(0.1));
        b.handle(BidderEvent::Join(ResourceId(3)));
        assert_eq!(b.claim(), 0.1);
        b.handle(BidderEvent::Leave(ResourceId(3)));
        assert_eq!(b.claim(), 0.5);
    }

    #[test]
    fn zero_demand_claims_nothing() {
        let mut b = bidder(0.5);
        b.handle(BidderEvent::Join(ResourceId(1)));
        offer(&mut b, 1, 0.9);
        let msg = b.handle(BidderEvent::SetDemand(0.0)).unwrap();
        assert_eq!(msg.value, 0.0);
        assert_eq!(b.claim(), 0.0);
    }

    #[test]
    fn leave_of_unknown_auction_is_ignored() {
        let mut b = bidder(0.5);
        assert!(b.handle(BidderEvent::Leave(ResourceId(9))).is_none() || b.claim() == 0.5);
        assert_eq!(b.claim(), 0.5);
    }

    #[test]
    fn unchanged_claims_are_suppressed() {
        let mut b = bidder(0.5);
        b.handle(BidderEvent::Join(ResourceId(1)));
        assert!(offer(&mut b, 1, 0.3).is_some());
        assert!(offer(&mut b, 1, 0.3).is_none());
        // Membership change forces a resend even with the same value.
        assert!(b.handle(BidderEvent::Join(ResourceId(2))).is_some());

        let mut always = Bidder::new(
            DemandId(0),
            EngineConfig {
                always_send: true,
                ..EngineConfig::exact()
            },
        );
        always.handle(BidderEvent::SetDemand(0.5));
        assert!(always.handle(BidderEvent::SetDemand(0.5)).is_some());
    }

    #[test]
    fn quantized_claims_land_on_the_grid() {
        let mut b = Bidder::new(DemandId(0), EngineConfig::default());
        let msg = b.handle(BidderEvent::SetDemand(0.25)).unwrap();
        assert_eq!(msg.wire_value().raw(), 64);
        assert_eq!(msg.value, 64.0 / 255.0);
        assert_eq!(b.claim(), 0.25);
    }

    #[test]
    fn weighted_claim_is_per_fragment() {
        let mut b = Bidder::new(
            DemandId(0),
            EngineConfig {
                weighted: true,
                ..EngineConfig::exact()
            },
        );
        b.handle(BidderEvent::SetWeight(Weight::new(4).unwrap()));
        let msg = b.handle(BidderEvent::SetDemand(0.8)).unwrap();
        assert!((msg.value - 0.2).abs() < 1e-12);
        assert_eq!(msg.weight, Some(Weight::new(4).unwrap()));
    }
}
