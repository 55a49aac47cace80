//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use atlas_core::allocation::{
    Allocation, AllocationProblem, Demand, DemandId, Resource, ResourceId,
};
use rand::Rng;

/// Random bipartite problem with up to `max_demands` demands, `max_resources`
/// resources and `max_per_demand` resources per demand. Values lie in `[0, 1]`;
/// roughly one demand in eight is inactive.
pub fn random_problem(
    rng: &mut impl Rng,
    max_demands: usize,
    max_resources: usize,
    max_per_demand: usize,
    max_weight: u32,
) -> AllocationProblem {
    let n_res = rng.gen_range(1..=max_resources);
    let n_dem = rng.gen_range(1..=max_demands);
    let resources: Vec<Resource> = (0..n_res)
        .map(|j| Resource {
            id: ResourceId(j as u32),
            capacity: rng.gen_range(0.05..=1.0),
        })
        .collect();
    let demands: Vec<Demand> = (0..n_dem)
        .map(|i| {
            let k = rng.gen_range(0..=max_per_demand.min(n_res));
            let mut rs = BTreeSet::new();
            while rs.len() < k {
                rs.insert(ResourceId(rng.gen_range(0..n_res) as u32));
            }
            let magnitude = if rng.gen_bool(0.125) {
                0.0
            } else {
                rng.gen_range(0.0..=1.0)
            };
            Demand {
                id: DemandId(i as u32),
                magnitude,
                weight: rng.gen_range(1..=max_weight),
                resources: rs,
            }
        })
        .collect();
    AllocationProblem::new(resources, demands).unwrap()
}

/// Lexicographic comparison of two ascending vectors with tolerance `tol`.
pub fn lex_cmp(a: &[f64], b: &[f64], tol: f64) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        if (x - y).abs() > tol {
            return x.partial_cmp(y).unwrap();
        }
    }
    a.len().cmp(&b.len())
}

/// Exhaustive search for the feasible allocation on the grid `{k / steps}`
/// whose ascending value vector is lexicographically largest. Returns grid
/// units per demand.
///
/// A sorted vector is lexicographically larger exactly when its counts
/// `#{i : x_i <= t}`, read for `t = 0, 1, ..`, are lexicographically smaller.
/// The search walks `t` upward and keeps every partial assignment whose count
/// prefix is optimal; at level `t` it enumerates all subsets of the still-open
/// demands that can be lifted past `t`.
pub fn grid_lexmax(problem: &AllocationProblem, steps: u32) -> BTreeMap<DemandId, u32> {
    let scale = f64::from(steps);
    let ids: Vec<DemandId> = problem.demand_ids().collect();
    let res_ids: Vec<ResourceId> = problem.resource_ids().collect();
    let res_index: BTreeMap<ResourceId, usize> =
        res_ids.iter().enumerate().map(|(k, &j)| (j, k)).collect();
    let caps: Vec<i64> = res_ids
        .iter()
        .map(|&j| (problem.capacity(j).unwrap() * scale + 1e-9).floor() as i64)
        .collect();
    let demand_caps: Vec<i64> = ids
        .iter()
        .map(|&i| (problem.demand(i).unwrap().magnitude * scale + 1e-9).floor() as i64)
        .collect();
    let uses: Vec<Vec<usize>> = ids
        .iter()
        .map(|&i| {
            problem
                .demand(i)
                .unwrap()
                .resources
                .iter()
                .map(|j| res_index[j])
                .collect()
        })
        .collect();
    let n = ids.len();
    assert!(n <= 20, "exhaustive grid search is limited to 20 demands");

    // x_i for frozen demands, `None` for demands still rising.
    let fits = |frozen: &[Option<i64>], floor: i64| {
        let mut load = vec![0i64; caps.len()];
        for i in 0..n {
            let v = frozen[i].unwrap_or(floor);
            for &j in &uses[i] {
                load[j] += v;
            }
        }
        load.iter().zip(&caps).all(|(l, c)| l <= c)
    };

    let mut states: BTreeSet<Vec<Option<i64>>> = BTreeSet::new();
    states.insert(vec![None; n]);
    for t in 0..=i64::from(steps) {
        let mut next: BTreeSet<Vec<Option<i64>>> = BTreeSet::new();
        let mut best_frozen = usize::MAX;
        for state in &states {
            let open: Vec<usize> = (0..n).filter(|&i| state[i].is_none()).collect();
            // Open demands whose cap is `t` cannot rise further.
            let liftable: Vec<usize> = open
                .iter()
                .copied()
                .filter(|&i| demand_caps[i] > t)
                .collect();
            for mask in 0u32..(1 << liftable.len()) {
                let mut candidate = state.clone();
                for &i in &open {
                    candidate[i] = Some(t);
                }
                for (b, &i) in liftable.iter().enumerate() {
                    if mask & (1 << b) != 0 {
                        candidate[i] = None;
                    }
                }
                let frozen = candidate.iter().filter(|v| v.is_some()).count();
                if frozen > best_frozen || !fits(&candidate, t + 1) {
                    continue;
                }
                if frozen < best_frozen {
                    best_frozen = frozen;
                    next.clear();
                }
                next.insert(candidate);
            }
        }
        states = next;
        if best_frozen == n {
            break;
        }
    }
    let best = states
        .into_iter()
        .next()
        .expect("the all-zero point is feasible");
    ids.into_iter()
        .zip(best)
        .map(|(i, v)| (i, v.expect("every demand frozen") as u32))
        .collect()
}

pub fn grid_to_allocation(grid: &BTreeMap<DemandId, u32>, steps: u32) -> Allocation {
    grid.iter()
        .map(|(&i, &v)| (i, f64::from(v) / f64::from(steps)))
        .collect()
}

/// Replace every demand of weight `γ` by `γ` unit-weight fragments of
/// magnitude `w / γ`. Returns the expanded problem and, per fragment, the
/// demand it came from.
pub fn expand_fragments(
    problem: &AllocationProblem,
) -> (AllocationProblem, BTreeMap<DemandId, DemandId>) {
    let mut origin = BTreeMap::new();
    let mut demands = Vec::new();
    let mut next = 0u32;
    for d in problem.demands() {
        for _ in 0..d.weight {
            let id = DemandId(next);
            next += 1;
            origin.insert(id, d.id);
            demands.push(Demand {
                id,
                magnitude: d.magnitude / f64::from(d.weight),
                weight: 1,
                resources: d.resources.clone(),
            });
        }
    }
    let resources: Vec<Resource> = problem
        .resource_ids()
        .map(|j| Resource {
            id: j,
            capacity: problem.capacity(j).unwrap(),
        })
        .collect();
    (AllocationProblem::new(resources, demands).unwrap(), origin)
}
