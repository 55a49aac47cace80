//! Slotted wireless channel simulation of nodes running the allocation MAC.

pub mod geometry;
pub mod presets;
pub mod run;
pub mod scenario;
pub mod truth;

pub use run::{
    run_scenario, ClaimFrame, NodeSummary, RunOutput, SimError, Simulation, AUDIT_SLACK,
};
pub use scenario::{
    DemandChangeKind, DemandModel, Event, GraphNode, Mobility, RateRange, Scenario, ScenarioError,
    Topology, Traffic,
};
pub use truth::GroundTruth;
