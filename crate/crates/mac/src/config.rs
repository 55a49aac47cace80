use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PersistenceMode {
    /// Persistence equals the node's own claim.
    Lazy,
    /// Persistence equals the smallest offer among attended auctions, so it
    /// may exceed the demand; packets, not the schedule, then bound occupancy.
    #[default]
    Eager,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReceiverMode {
    /// Every neighbour is a receiver of every transmission.
    Physical,
    /// Only addressed destinations are receivers.
    #[default]
    Mac,
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum ConfigError {
    #[error("{field} must be {expected}, got {value}")]
    OutOfRange {
        field: &'static str,
        expected: &'static str,
        value: f64,
    },
    #[error("p_min ({p_min}) exceeds p_default ({p_default})")]
    FloorAboveDefault { p_min: f64, p_default: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NodeConfig {
    /// Slots per frame.
    pub v: u32,
    /// Slot duration in seconds.
    pub slot_len: f64,
    pub p_default: f64,
    pub p_min: f64,
    /// Neighbour timeout in seconds.
    pub t_lost_nbr: f64,
    pub persistence_mode: PersistenceMode,
    pub receiver_mode: ReceiverMode,
    pub weighted: bool,
    pub max_retries: u8,
    /// Frames after a new neighbour during which persistence stays capped.
    pub discovery_frames: u32,
    /// Drop-tail queue limit in packets.
    pub queue_capacity: usize,
}

impl Default for NodeConfig {
    fn default() -> Self {
        Self {
            v: 100,
            slot_len: 800e-6,
            p_default: 0.05,
            p_min: 0.01,
            t_lost_nbr: 0.5,
            persistence_mode: PersistenceMode::Eager,
            receiver_mode: ReceiverMode::Mac,
            weighted: false,
            max_retries: 10,
            discovery_frames: 1,
            queue_capacity: 50,
        }
    }
}

impl NodeConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let unit = |field, value: f64| {
            if (0.0..=1.0).contains(&value) {
                Ok(())
            } else {
                Err(ConfigError::OutOfRange {
                    field,
                    expected: "in [0, 1]",
                    value,
                })
            }
        };
        let positive = |field, value: f64| {
            if value > 0.0 && value.is_finite() {
                Ok(())
            } else {
                Err(ConfigError::OutOfRange {
                    field,
                    expected: "positive and finite",
                    value,
                })
            }
        };
        if self.v == 0 {
            return Err(ConfigError::OutOfRange {
                field: "v",
                expected: "at least 1",
                value: 0.0,
            });
        }
        if self.queue_capacity == 0 {
            return Err(ConfigError::OutOfRange {
                field: "queue_capacity",
                expected: "at least 1",
                value: 0.0,
            });
        }
        unit("p_default", self.p_default)?;
        unit("p_min", self.p_min)?;
        positive("slot_len", self.slot_len)?;
        positive("t_lost_nbr", self.t_lost_nbr)?;
        if self.p_min > self.p_default {
            return Err(ConfigError::FloorAboveDefault {
                p_min: self.p_min,
                p_default: self.p_default,
            });
        }
        Ok(())
    }

    /// Whole slots covering `seconds`, at least one.
    pub fn slots(&self, seconds: f64) -> u64 {
        ((seconds / self.slot_len).round() as u64).max(1)
    }

    pub fn frame_len(&self) -> f64 {
        f64::from(self.v) * self.slot_len
    }

    pub fn lost_nbr_slots(&self) -> u64 {
        self.slots(self.t_lost_nbr)
    }
}
