use std::collections::BTreeSet;

use atlas_core::allocation::{
    channel_problem, is_lex_max_min, is_weighted_lex_max_min, solve_max_min,
    solve_weighted_max_min, Allocation, AllocationProblem, ChannelNode, DemandId,
};

/// The allocation problem implied by the current topology and load, and its
/// max-min solution.
#[derive(Clone, Debug)]
pub struct GroundTruth {
    ids: Vec<u32>,
    weighted: bool,
    demands: Vec<f64>,
    weights: Vec<u32>,
    problem: AllocationProblem,
    oracle: Allocation,
    updates: u64,
}

impl GroundTruth {
    pub fn new(ids: Vec<u32>, weighted: bool, demands: Vec<f64>, weights: Vec<u32>) -> Self {
        let empty = vec![BTreeSet::new(); ids.len()];
        let problem = build(&ids, weighted, &demands, &weights, &empty);
        let oracle = solve(&problem, weighted);
        Self {
            ids,
            weighted,
            demands,
            weights,
            problem,
            oracle,
            updates: 1,
        }
    }

    pub fn set_demand(&mut self, index: usize, w: f64) {
        self.demands[index] = w;
    }

    pub fn demand(&self, index: usize) -> f64 {
        self.demands[index]
    }

    pub fn weight(&self, index: usize) -> u32 {
        self.weights[index]
    }

    /// Recompute the problem and oracle. `receivers[i]` holds the indices of
    /// the nodes whose auctions transmitter `i` consumes, excluding itself.
    pub fn rebuild(&mut self, receivers: &[BTreeSet<usize>]) {
        self.problem = build(
            &self.ids,
            self.weighted,
            &self.demands,
            &self.weights,
            receivers,
        );
        self.oracle = solve(&self.problem, self.weighted);
        self.updates += 1;
    }

    pub fn problem(&self) -> &AllocationProblem {
        &self.problem
    }

    pub fn oracle(&self) -> &Allocation {
        &self.oracle
    }

    /// Oracle value in claim units (per fragment when weighted).
    pub fn target(&self, index: usize) -> f64 {
        self.oracle.get(DemandId(self.ids[index])).unwrap_or(0.0)
    }

    /// Oracle share of the channel for the whole demand.
    pub fn total(&self, index: usize) -> f64 {
        let w = if self.weighted {
            self.weights[index]
        } else {
            1
        };
        self.target(index) * f64::from(w)
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    /// Max-min audit of `claims` (claim units, by index).
    pub fn audit(&self, claims: &[f64], slack: f64) -> bool {
        let alloc: Allocation = self
            .ids
            .iter()
            .zip(claims)
            .map(|(&id, &c)| (DemandId(id), c))
            .collect();
        let verdict = if self.weighted {
            is_weighted_lex_max_min(&self.problem, &alloc, slack)
        } else {
            is_lex_max_min(&self.problem, &alloc, slack)
        };
        verdict.unwrap_or(false)
    }
}

fn build(
    ids: &[u32],
    weighted: bool,
    demands: &[f64],
    weights: &[u32],
    receivers: &[BTreeSet<usize>],
) -> AllocationProblem {
    let nodes = (0..ids.len()).map(|i| ChannelNode {
        id: ids[i],
        demand: demands[i],
        weight: if weighted { weights[i] } else { 1 },
        receivers: receivers[i].iter().map(|&j| ids[j]).collect(),
    });
    channel_problem(nodes).expect("simulated problems are well formed")
}

fn solve(problem: &AllocationProblem, weighted: bool) -> Allocation {
    if weighted {
        solve_weighted_max_min(problem)
    } else {
        solve_max_min(problem)
    }
}
