//! Distributed lexicographic max-min allocation (REACT), the ATLAS slotted
//! MAC built on it, and a deterministic slotted simulator for measuring both.

pub mod allocation;
pub mod presets;
pub mod react;
