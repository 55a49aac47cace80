use std::collections::BTreeSet;

use atlas_mac::NodeConfig;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("scenario file: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
}

fn invalid(field: &str, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid {
        field: field.to_string(),
        message: message.into(),
    }
}

/// Per-node packet rate interval in packets per second.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateRange {
    pub min: f64,
    pub max: f64,
}

impl RateRange {
    pub const SMALL: RateRange = RateRange {
        min: 25.0,
        max: 125.0,
    };
    pub const LARGE: RateRange = RateRange {
        min: 450.0,
        max: 550.0,
    };
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DemandModel {
    /// Demand is the configured rate times the slot length.
    #[default]
    Nominal,
    /// Demand is estimated from the queue.
    Estimated,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Traffic {
    /// Fraction of nodes with a packet source.
    pub loaded_fraction: f64,
    pub rate: RateRange,
    pub demand: DemandModel,
    /// Inclusive bidder weight interval, used when `node.weighted` is set.
    pub weights: [u32; 2],
}

impl Default for Traffic {
    fn default() -> Self {
        Self {
            loaded_fraction: 0.8,
            rate: RateRange::LARGE,
            demand: DemandModel::Nominal,
            weights: [1, 5],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphNode {
    pub id: u32,
    /// Fraction of slots demanded.
    pub demand: f64,
    #[serde(default = "one")]
    pub weight: u32,
}

fn one() -> u32 {
    1
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Topology {
    /// Uniform random placement in the area; links by distance.
    #[default]
    Random,
    /// Fixed node set and links; positions play no role.
    Graph {
        nodes: Vec<GraphNode>,
        links: Vec<[u32; 2]>,
    },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Mobility {
    #[default]
    Static,
    RandomWaypoint {
        /// Metres per second.
        speed: f64,
        /// Simulated seconds discarded before the run starts.
        #[serde(default = "default_warmup")]
        warmup: f64,
    },
}

fn default_warmup() -> f64 {
    30.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DemandChangeKind {
    /// An idle node starts a source.
    Add,
    /// A loaded node stops its source.
    Remove,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Event {
    #[default]
    None,
    /// One node's source starts or stops at `time`. `rate` is the class of
    /// that source, the background class when absent.
    DemandChange {
        time: f64,
        change: DemandChangeKind,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rate: Option<RateRange>,
    },
    /// One node starts just outside (add) or inside (remove) range of another
    /// and drifts across the range boundary at `time`.
    LinkChange {
        time: f64,
        add: bool,
        #[serde(default = "default_drift_speed")]
        speed: f64,
        /// Distance from the boundary at the start and end of the drift.
        #[serde(default = "default_margin")]
        margin: f64,
    },
    /// Graph topologies only: create the link `a`–`b` at `time`.
    AddLink { time: f64, a: u32, b: u32 },
}

fn default_drift_speed() -> f64 {
    10.0
}

fn default_margin() -> f64 {
    2.0
}

impl Event {
    pub fn name(&self) -> &'static str {
        match self {
            Event::None => "none",
            Event::DemandChange {
                change: DemandChangeKind::Add,
                ..
            } => "demand_add",
            Event::DemandChange {
                change: DemandChangeKind::Remove,
                ..
            } => "demand_remove",
            Event::LinkChange { add: true, .. } | Event::AddLink { .. } => "link_add",
            Event::LinkChange { add: false, .. } => "link_remove",
        }
    }

    pub fn time(&self) -> Option<f64> {
        match *self {
            Event::None => None,
            Event::DemandChange { time, .. }
            | Event::LinkChange { time, .. }
            | Event::AddLink { time, .. } => Some(time),
        }
    }
}

/// Everything a run depends on. The seed fixes every random choice.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub seed: u64,
    /// Ignored for graph topologies.
    pub nodes: usize,
    /// Long side of the area in metres.
    pub width: f64,
    pub height: f64,
    pub range: f64,
    /// Simulated seconds.
    pub duration: f64,
    /// Claims must stay this close to the oracle to count as converged.
    pub tolerance: f64,
    pub topology: Topology,
    pub traffic: Traffic,
    pub mobility: Mobility,
    pub event: Event,
    pub node: NodeConfig,
    /// Keep a line per delivery, loss and collision.
    pub trace: bool,
    /// Keep every node's claim once per frame.
    pub record_claims: bool,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            name: "scenario".into(),
            seed: 1,
            nodes: 50,
            width: 1500.0,
            height: 300.0,
            range: 250.0,
            duration: 5.0,
            tolerance: 2.0 / 255.0,
            topology: Topology::Random,
            traffic: Traffic::default(),
            mobility: Mobility::Static,
            event: Event::None,
            node: NodeConfig::default(),
            trace: false,
            record_claims: false,
        }
    }
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self, ScenarioError> {
        let s: Scenario = toml::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenarios serialize")
    }

    pub fn node_count(&self) -> usize {
        match &self.topology {
            Topology::Random => self.nodes,
            Topology::Graph { nodes, .. } => nodes.len(),
        }
    }

    pub fn slots(&self) -> u64 {
        (self.duration / self.node.slot_len).round() as u64
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        self.node
            .validate()
            .map_err(|e| invalid("node", e.to_string()))?;
        let positive = |field: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(field, format!("must be positive, got {v}")))
            }
        };
        positive("duration", self.duration)?;
        positive("range", self.range)?;
        if !(self.tolerance >= 0.0 && self.tolerance.is_finite()) {
            return Err(invalid("tolerance", "must be non-negative"));
        }
        let t = &self.traffic;
        if !(0.0..=1.0).contains(&t.loaded_fraction) {
            return Err(invalid(
                "traffic.loaded_fraction",
                format!("must be in [0, 1], got {}", t.loaded_fraction),
            ));
        }
        if !(t.rate.min >= 0.0 && t.rate.min <= t.rate.max && t.rate.max.is_finite()) {
            return Err(invalid("traffic.rate", "need 0 <= min <= max"));
        }
        if t.weights[0] == 0 || t.weights[0] > t.weights[1] || t.weights[1] > 16 {
            return Err(invalid("traffic.weights", "need 1 <= low <= high <= 16"));
        }
        match &self.topology {
            Topology::Random => {
                if self.nodes == 0 {
                    return Err(invalid("nodes", "must be at least 1"));
                }
                positive("width", self.width)?;
                positive("height", self.height)?;
            }
            Topology::Graph { nodes, links } => {
                let ids: BTreeSet<u32> = nodes.iter().map(|n| n.id).collect();
                if ids.len() != nodes.len() || ids.is_empty() {
                    return Err(invalid(
                        "topology.nodes",
                        "ids must be unique and non-empty",
                    ));
                }
                for n in nodes {
                    if !(0.0..=1.0).contains(&n.demand) {
                        return Err(invalid(
                            "topology.nodes.demand",
                            format!("node {}: must be in [0, 1]", n.id),
                        ));
                    }
                    if n.weight == 0 || n.weight > 16 {
                        return Err(invalid(
                            "topology.nodes.weight",
                            format!("node {}: must be in 1..=16", n.id),
                        ));
                    }
                }
                for [a, b] in links {
                    if a == b || !ids.contains(a) || !ids.contains(b) {
                        return Err(invalid("topology.links", format!("bad link {a}-{b}")));
                    }
                }
                if !matches!(self.mobility, Mobility::Static) {
                    return Err(invalid("mobility", "graph topologies are static"));
                }
            }
        }
        if let Mobility::RandomWaypoint { speed, warmup } = self.mobility {
            if !(speed >= 0.0 && speed.is_finite()) {
                return Err(invalid("mobility.speed", "must be non-negative"));
            }
            if !(warmup >= 0.0 && warmup.is_finite()) {
                return Err(invalid("mobility.warmup", "must be non-negative"));
            }
        }
        if let Event::DemandChange { rate: Some(r), .. } = self.event {
            if !(r.min >= 0.0 && r.min <= r.max && r.max.is_finite()) {
                return Err(invalid("event.rate", "need 0 <= min <= max"));
            }
        }
        if let Some(time) = self.event.time() {
            if !(0.0..self.duration).contains(&time) {
                return Err(invalid("event.time", "must fall inside the run"));
            }
        }
        match (&self.event, &self.topology) {
            (Event::AddLink { a, b, .. }, Topology::Graph { nodes, .. }) => {
                let known = |x: &u32| nodes.iter().any(|n| n.id == *x);
                if a == b || !known(a) || !known(b) {
                    return Err(invalid("event", format!("bad link {a}-{b}")));
                }
            }
            (Event::AddLink { .. }, Topology::Random) => {
                return Err(invalid("event", "add_link needs a graph topology"));
            }
            (Event::LinkChange { speed, margin, .. }, Topology::Random) => {
                positive("event.speed", *speed)?;
                positive("event.margin", *margin)?;
                if self.nodes < 2 {
                    return Err(invalid("event", "link changes need two nodes"));
                }
                if !matches!(self.mobility, Mobility::Static) {
                    return Err(invalid("event", "link changes need a static network"));
                }
            }
            (Event::LinkChange { .. }, Topology::Graph { .. }) => {
                return Err(invalid("event", "link_change needs a random topology"));
            }
            _ => {}
        }
        Ok(())
    }
}
