//! Eight-bit encoding of offers, claims and persistences, and the REACT header
//! that rides in every MAC transmission.
//!
//! Layout, in transmission order:
//!
//! | byte | content                                   |
//! |------|-------------------------------------------|
//! | 0    | offer, `round(x * 255)`                    |
//! | 1    | claim, `round(x * 255)`                    |
//! | 2    | weighted mode only: low nibble `γ - 1`, high nibble zero |
//!
//! A data packet and its acknowledgement each carry the two value bytes, so one
//! exchange costs four header bytes.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WireError {
    #[error("value {0} is outside [0, 1]")]
    OutOfRange(f64),
    #[error("weight {0} is outside [1, 16]")]
    InvalidWeight(u32),
    #[error("header needs {expected} bytes, got {actual}")]
    Truncated { expected: usize, actual: usize },
    #[error("reserved weight bits set in {0:#04x}")]
    ReservedBits(u8),
}

/// Number of quantization steps between 0 and 1.
pub const GRID_STEPS: f64 = 255.0;

/// Largest round-trip error of the encoding: half a quantization step.
pub const MAX_ROUND_TRIP_ERROR: f64 = 0.5 / 255.0;

/// A fraction in `[0, 1]` stored as `raw / 255`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WireValue(u8);

impl WireValue {
    pub const ZERO: WireValue = WireValue(0);
    pub const ONE: WireValue = WireValue(255);

    pub fn encode(x: f64) -> Result<Self, WireError> {
        if !(0.0..=1.0).contains(&x) {
            return Err(WireError::OutOfRange(x));
        }
        Ok(WireValue((x * 255.0).round() as u8))
    }

    /// Like [`encode`](Self::encode) but clamps into range first. Used where the
    /// engine produces values that can stray past the unit interval only through
    /// rounding.
    pub fn saturating(x: f64) -> Self {
        let x = if x.is_nan() { 0.0 } else { x.clamp(0.0, 1.0) };
        WireValue((x * 255.0).round() as u8)
    }

    pub fn decode(self) -> f64 {
        f64::from(self.0) / 255.0
    }

    pub fn from_raw(raw: u8) -> Self {
        WireValue(raw)
    }

    pub fn raw(self) -> u8 {
        self.0
    }
}

/// Snap a fraction to the nearest representable value.
pub fn quantize(x: f64) -> f64 {
    WireValue::saturating(x).decode()
}

/// Bidder weight carried as a four-bit field.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct Weight(u8);

impl Weight {
    pub const ONE: Weight = Weight(1);
    pub const MAX: u32 = 16;

    pub fn new(value: u32) -> Result<Self, WireError> {
        if (1..=Self::MAX).contains(&value) {
            Ok(Weight(value as u8))
        } else {
            Err(WireError::InvalidWeight(value))
        }
    }

    pub fn get(self) -> u32 {
        u32::from(self.0)
    }

    pub fn nibble(self) -> u8 {
        self.0 - 1
    }

    pub fn from_nibble(nibble: u8) -> Result<Self, WireError> {
        if nibble > 0x0f {
            return Err(WireError::ReservedBits(nibble));
        }
        Ok(Weight(nibble + 1))
    }
}

impl Default for Weight {
    fn default() -> Self {
        Weight::ONE
    }
}

impl TryFrom<u32> for Weight {
    type Error = WireError;
    fn try_from(value: u32) -> Result<Self, Self::Error> {
        Weight::new(value)
    }
}

impl From<Weight> for u32 {
    fn from(w: Weight) -> u32 {
        w.get()
    }
}

/// Offer and claim piggybacked on a MAC transmission.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReactHeader {
    pub offer: WireValue,
    pub claim: WireValue,
    pub weight: Option<Weight>,
}

impl ReactHeader {
    pub fn len(&self) -> usize {
        if self.weight.is_some() {
            3
        } else {
            2
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = vec![self.offer.raw(), self.claim.raw()];
        if let Some(w) = self.weight {
            out.push(w.nibble());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], weighted: bool) -> Result<Self, WireError> {
        let expected = if weighted { 3 } else { 2 };
        if bytes.len() < expected {
            return Err(WireError::Truncated {
                expected,
                actual: bytes.len(),
            });
        }
        let weight = if weighted {
            Some(Weight::from_nibble(bytes[2])?)
        } else {
            None
        };
        Ok(ReactHeader {
            offer: WireValue(bytes[0]),
            claim: WireValue(bytes[1]),
            weight,
        })
    }
}
