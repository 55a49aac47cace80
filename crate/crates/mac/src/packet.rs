use atlas_core::react::ReactHeader;
use serde::{Deserialize, Serialize};

/// Data payload size in bytes.
pub const DATA_PAYLOAD: u16 = 900;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PacketKind {
    Data,
    /// Header-only filler sent while an overloaded auction needs the node to
    /// keep talking. Broadcast, never acked, never counted as throughput.
    Dummy,
    /// Header-only broadcast from a node with queued data but no known
    /// destination.
    Beacon,
}

/// One transmission. The REACT header adds two bytes (three when weighted)
/// to the data packet and two more to its ack, four bytes per exchange.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MacPacket {
    pub id: u64,
    pub src: u32,
    /// `None` for broadcasts.
    pub dst: Option<u32>,
    pub kind: PacketKind,
    pub payload_len: u16,
    pub header: ReactHeader,
    pub retry: u8,
    /// Slot the packet entered the queue.
    pub enqueued_at: u64,
}

impl MacPacket {
    pub fn wire_len(&self) -> usize {
        usize::from(self.payload_len) + self.header.len()
    }
}

/// In-slot acknowledgement, carrying the receiver's own header.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ack {
    pub src: u32,
    pub dst: u32,
    pub packet: u64,
    pub header: ReactHeader,
}
