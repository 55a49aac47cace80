//! ATLAS: a slotted MAC whose per-node transmit persistence is the node's
//! REACT claim (or the smallest offer it hears).
//!
//! Each node runs a bidder for its own demand and an auctioneer for its own
//! receive capacity. Offers and claims ride in the header of every data packet
//! and ack, so the auction needs no extra control traffic.

pub mod config;
pub mod demand;
pub mod neighbours;
pub mod node;
pub mod packet;
pub mod persistence;
pub mod schedule;

pub use config::{ConfigError, NodeConfig, PersistenceMode, ReceiverMode};
pub use demand::{estimate_demand, DemandEstimator};
pub use neighbours::NeighbourTable;
pub use node::{AckResult, Heard, NodeRuntime, NodeStats};
pub use packet::{Ack, MacPacket, PacketKind};
pub use persistence::{apply_overrides, compute_persistence, Overridden, OverrideContext};
pub use schedule::{build_schedule, draw_slot_count, Schedule, ScheduleError};
