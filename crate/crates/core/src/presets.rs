//! Reference instances.

use std::collections::{BTreeMap, BTreeSet};

use crate::allocation::{channel_problem, AllocationProblem, ChannelNode};

/// Links of the seven-node example network before node 7 arrives.
pub const FIG2_LINKS: [(u32, u32); 5] = [(1, 3), (2, 3), (3, 4), (4, 5), (4, 6)];

/// The link that appears when node 7 moves into range of node 3.
pub const FIG2_ADDED_LINK: (u32, u32) = (3, 7);

/// Demands of the example: node 6 asks for 0.05, every other node for the full channel.
pub fn fig2_demands() -> BTreeMap<u32, f64> {
    (1..=7)
        .map(|i| (i, if i == 6 { 0.05 } else { 1.0 }))
        .collect()
}

pub fn fig2_links(with_added_link: bool) -> Vec<(u32, u32)> {
    let mut links = FIG2_LINKS.to_vec();
    if with_added_link {
        links.push(FIG2_ADDED_LINK);
    }
    links
}

/// Channel problem for an undirected graph where every node is a receiver for
/// all of its neighbours.
pub fn graph_problem(demands: &BTreeMap<u32, f64>, links: &[(u32, u32)]) -> AllocationProblem {
    let mut adjacency: BTreeMap<u32, BTreeSet<u32>> =
        demands.keys().map(|&i| (i, BTreeSet::new())).collect();
    for &(a, b) in links {
        adjacency.entry(a).or_default().insert(b);
        adjacency.entry(b).or_default().insert(a);
    }
    channel_problem(adjacency.into_iter().map(|(id, receivers)| ChannelNode {
        id,
        demand: demands.get(&id).copied().unwrap_or(0.0),
        weight: 1,
        receivers,
    }))
    .expect("graph problems are well formed")
}

pub fn fig2_problem(with_added_link: bool) -> AllocationProblem {
    graph_problem(&fig2_demands(), &fig2_links(with_added_link))
}
