//! Scenario families used by the experiments.

use atlas_core::presets::{fig2_demands, fig2_links, FIG2_ADDED_LINK};
use atlas_mac::{NodeConfig, PersistenceMode, ReceiverMode};
use serde::{Deserialize, Serialize};

use crate::scenario::{
    DemandChangeKind, Event, GraphNode, Mobility, RateRange, Scenario, Topology,
};

/// Nodes per metre of width at the reference density (50 nodes over 1500 m).
pub const REFERENCE_DENSITY: f64 = 50.0 / 1500.0;

/// The four protocol configurations compared throughout.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Configuration {
    Nominal,
    Lazy,
    Physical,
    Weighted,
}

impl Configuration {
    pub const ALL: [Configuration; 4] = [
        Configuration::Nominal,
        Configuration::Lazy,
        Configuration::Physical,
        Configuration::Weighted,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Configuration::Nominal => "nominal",
            Configuration::Lazy => "lazy",
            Configuration::Physical => "physical",
            Configuration::Weighted => "weighted",
        }
    }

    /// Nominal is eager, MAC receivers, unweighted; the others flip one choice.
    pub fn node_config(self) -> NodeConfig {
        let mut c = NodeConfig {
            persistence_mode: PersistenceMode::Eager,
            receiver_mode: ReceiverMode::Mac,
            weighted: false,
            ..NodeConfig::default()
        };
        match self {
            Configuration::Nominal => {}
            Configuration::Lazy => c.persistence_mode = PersistenceMode::Lazy,
            Configuration::Physical => c.receiver_mode = ReceiverMode::Physical,
            Configuration::Weighted => c.weighted = true,
        }
        c
    }
}

/// Background traffic: 20% or 80% of nodes with small or large sources.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Load {
    SmallLight,
    SmallHeavy,
    LargeLight,
    LargeHeavy,
}

impl Load {
    pub const ALL: [Load; 4] = [
        Load::SmallLight,
        Load::SmallHeavy,
        Load::LargeLight,
        Load::LargeHeavy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Load::SmallLight => "small20",
            Load::SmallHeavy => "small80",
            Load::LargeLight => "large20",
            Load::LargeHeavy => "large80",
        }
    }

    pub fn fraction(self) -> f64 {
        match self {
            Load::SmallLight | Load::LargeLight => 0.2,
            Load::SmallHeavy | Load::LargeHeavy => 0.8,
        }
    }

    pub fn rate(self) -> RateRange {
        match self {
            Load::SmallLight | Load::SmallHeavy => RateRange::SMALL,
            Load::LargeLight | Load::LargeHeavy => RateRange::LARGE,
        }
    }
}

/// Node count holding the reference density over `width` metres.
pub fn nodes_for_width(width: f64) -> usize {
    (REFERENCE_DENSITY * width).round().max(1.0) as usize
}

/// Static random network started from cold.
pub fn init_convergence(config: Configuration, load: Load, nodes: usize, seed: u64) -> Scenario {
    Scenario {
        name: format!("init-{}-{}", config.name(), load.name()),
        seed,
        nodes,
        duration: 5.0,
        node: config.node_config(),
        traffic: crate::scenario::Traffic {
            loaded_fraction: load.fraction(),
            rate: load.rate(),
            ..Default::default()
        },
        ..Scenario::default()
    }
}

/// One source starts or stops after the network has settled.
pub fn demand_change(
    config: Configuration,
    load: Load,
    change: DemandChangeKind,
    class: RateRange,
    nodes: usize,
    seed: u64,
) -> Scenario {
    let mut s = init_convergence(config, load, nodes, seed);
    let kind = match change {
        DemandChangeKind::Add => "add",
        DemandChangeKind::Remove => "remove",
    };
    let size = if class == RateRange::SMALL {
        "small"
    } else {
        "large"
    };
    s.name = format!("demand-{kind}-{size}-{}-{}", config.name(), load.name());
    s.duration = 6.0;
    s.event = Event::DemandChange {
        time: 3.0,
        change,
        rate: Some(class),
    };
    s
}

/// One link appears or disappears after the network has settled.
pub fn topology_change(
    config: Configuration,
    load: Load,
    add: bool,
    nodes: usize,
    seed: u64,
) -> Scenario {
    let mut s = init_convergence(config, load, nodes, seed);
    s.name = format!(
        "link-{}-{}-{}",
        if add { "add" } else { "remove" },
        config.name(),
        load.name()
    );
    s.duration = 6.0;
    s.event = Event::LinkChange {
        time: 3.0,
        add,
        speed: 10.0,
        margin: 2.0,
    };
    s
}

/// Static network `width` metres long at the reference density.
pub fn scaling(load: Load, width: f64, seed: u64) -> Scenario {
    let nodes = nodes_for_width(width);
    let mut s = init_convergence(Configuration::Nominal, load, nodes, seed);
    s.name = format!("scaling-{}m-{}", width, load.name());
    s.width = width;
    s
}

/// Random-waypoint network at `speed` metres per second.
pub fn mobility(load: Load, speed: f64, nodes: usize, seed: u64) -> Scenario {
    let mut s = init_convergence(Configuration::Nominal, load, nodes, seed);
    s.name = format!("mobility-{speed}-{}", load.name());
    s.duration = 10.0;
    s.mobility = Mobility::RandomWaypoint {
        speed,
        warmup: 30.0,
    };
    s
}

/// The seven-node worked example: node 7 links to node 3 at one second.
pub fn fig2() -> Scenario {
    let nodes = fig2_demands()
        .into_iter()
        .map(|(id, demand)| GraphNode {
            id,
            demand,
            weight: 1,
        })
        .collect();
    let links = fig2_links(false).into_iter().map(|(a, b)| [a, b]).collect();
    let (a, b) = FIG2_ADDED_LINK;
    Scenario {
        name: "fig2".into(),
        duration: 2.0,
        topology: Topology::Graph { nodes, links },
        event: Event::AddLink { time: 1.0, a, b },
        node: Configuration::Physical.node_config(),
        record_claims: true,
        ..Scenario::default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for c in Configuration::ALL {
            for l in Load::ALL {
                init_convergence(c, l, 20, 1).validate().unwrap();
            }
        }
        let c = Configuration::Nominal;
        demand_change(
            c,
            Load::LargeHeavy,
            DemandChangeKind::Remove,
            RateRange::SMALL,
            20,
            1,
        )
        .validate()
        .unwrap();
        topology_change(c, Load::SmallLight, true, 50, 1)
            .validate()
            .unwrap();
        scaling(Load::LargeLight, 6000.0, 1).validate().unwrap();
        mobility(Load::LargeLight, 30.0, 50, 1).validate().unwrap();
        fig2().validate().unwrap();
    }

    #[test]
    fn density_is_held_constant() {
        assert_eq!(nodes_for_width(1500.0), 50);
        assert_eq!(nodes_for_width(1250.0), 42);
        assert_eq!(nodes_for_width(6000.0), 200);
    }
}
