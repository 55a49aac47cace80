//! Measurements over simulated ATLAS runs.
//!
//! Everything here is a plain accumulator or a pure function; the simulator
//! feeds samples slot by slot and freezes a [`MetricsReport`] at the end.

mod convergence;
mod error;
mod impact;
mod report;

pub use convergence::{detect_convergence, ConvergenceTime, ConvergenceTracker};
pub use error::{relative_error, ErrorAccumulator, PersistenceError, WindowedError};
pub use impact::{hop_distances, range_of_impact};
pub use report::{DelayStats, MetricsReport, ReportError, CSV_COLUMNS};
