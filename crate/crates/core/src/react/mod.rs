//! REACT: an asynchronous auction whose bidder claims converge on the
//! lexicographic max-min allocation.
//!
//! Bidders and auctioneers are plain state machines. The host feeds them events
//! and forwards whatever message they return; nothing here knows about time or
//! transport. [`network`] wires a whole problem together over delayed channels.

mod auctioneer;
mod bidder;
pub mod network;
pub mod wire;

pub use auctioneer::{compute_offer, compute_quantized_offer, Auctioneer, AuctioneerEvent};
pub use bidder::{compute_claim, Bidder, BidderEvent};
pub use wire::{quantize, ReactHeader, Weight, WireError, WireValue};

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EngineConfig {
    /// Snap emitted values to the 8-bit wire grid.
    pub quantize: bool,
    /// Emit on every update even when the encoded value is unchanged.
    pub always_send: bool,
    /// Carry bidder weights and run the auction over demand fragments.
    pub weighted: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            quantize: true,
            always_send: false,
            weighted: false,
        }
    }
}

impl EngineConfig {
    pub fn exact() -> Self {
        Self {
            quantize: false,
            ..Self::default()
        }
    }

    fn emit_value(&self, x: f64) -> f64 {
        if self.quantize {
            quantize(x)
        } else {
            x.max(0.0)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageKind {
    Offer,
    Claim,
}

/// An offer (auctioneer to its bidders) or a claim (bidder to its auctions).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReactMessage {
    pub kind: MessageKind,
    pub sender: u32,
    /// Fraction as received; already on the wire grid when quantization is on.
    pub value: f64,
    /// Claims in weighted mode only.
    pub weight: Option<Weight>,
}

impl ReactMessage {
    pub fn wire_value(&self) -> WireValue {
        WireValue::saturating(self.value)
    }
}
