//! Resource allocation problems and the centralized max-min reference solver.
//!
//! A problem is a bipartite structure: every demand consumes capacity at all of
//! its resources simultaneously. An allocation is lexicographically max-min when
//! every demand is either satisfied or holds a maximal share at some saturated
//! resource. [`solve_max_min`] computes that allocation by progressive filling.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance used by the predicates when callers ask for an exact check.
pub const EPSILON: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DemandId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ResourceId(pub u32);

impl fmt::Display for DemandId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "d{}", self.0)
    }
}

impl fmt::Display for ResourceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "r{}", self.0)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AllocationError {
    #[error("duplicate resource id {0}")]
    DuplicateResource(ResourceId),
    #[error("duplicate demand id {0}")]
    DuplicateDemand(DemandId),
    #[error("demand {demand} refers to unknown resource {resource}")]
    UnknownResource {
        demand: DemandId,
        resource: ResourceId,
    },
    #[error("resource {resource} has invalid capacity {value}")]
    InvalidCapacity { resource: ResourceId, value: f64 },
    #[error("demand {demand} has invalid magnitude {value}")]
    InvalidMagnitude { demand: DemandId, value: f64 },
    #[error("demand {demand} has invalid weight {weight}")]
    InvalidWeight { demand: DemandId, weight: u32 },
    #[error(
        "allocation does not cover the problem's demands (missing {missing:?}, extra {extra:?})"
    )]
    MismatchedDemands {
        missing: Vec<DemandId>,
        extra: Vec<DemandId>,
    },
    #[error("allocation is not feasible")]
    Infeasible,
}

/// Serialized form of a resource.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Resource {
    pub id: ResourceId,
    pub capacity: f64,
}

/// Serialized form of a demand with its resource set `R_i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Demand {
    pub id: DemandId,
    pub magnitude: f64,
    #[serde(default = "default_weight")]
    pub weight: u32,
    #[serde(default)]
    pub resources: BTreeSet<ResourceId>,
}

fn default_weight() -> u32 {
    1
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    #[serde(default, rename = "resource")]
    pub resources: Vec<Resource>,
    #[serde(default, rename = "demand")]
    pub demands: Vec<Demand>,
}

/// A validated allocation problem. `D_j` is maintained as the exact inverse of
/// every demand's `R_i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProblemSpec", into = "ProblemSpec")]
pub struct AllocationProblem {
    capacities: BTreeMap<ResourceId, f64>,
    demands: BTreeMap<DemandId, Demand>,
    bidders: BTreeMap<ResourceId, BTreeSet<DemandId>>,
}

impl AllocationProblem {
    pub fn new(
        resources: impl IntoIterator<Item = Resource>,
        demands: impl IntoIterator<Item = Demand>,
    ) -> Result<Self, AllocationError> {
        let mut capacities = BTreeMap::new();
        for r in resources {
            if !r.capacity.is_finite() || r.capacity < 0.0 {
                return Err(AllocationError::InvalidCapacity {
                    resource: r.id,
                    value: r.capacity,
                });
            }
            if capacities.insert(r.id, r.capacity).is_some() {
                return Err(AllocationError::DuplicateResource(r.id));
            }
        }
        let mut bidders: BTreeMap<ResourceId, BTreeSet<DemandId>> =
            capacities.keys().map(|&id| (id, BTreeSet::new())).collect();
        let mut by_id = BTreeMap::new();
        for d in demands {
            if !d.magnitude.is_finite() || d.magnitude < 0.0 {
                return Err(AllocationError::InvalidMagnitude {
                    demand: d.id,
                    value: d.magnitude,
                });
            }
            if d.weight == 0 {
                return Err(AllocationError::InvalidWeight {
                    demand: d.id,
                    weight: d.weight,
                });
            }
            for r in &d.resources {
                match bidders.get_mut(r) {
                    Some(set) => {
                        set.insert(d.id);
                    }
                    None => {
                        return Err(AllocationError::UnknownResource {
                            demand: d.id,
                            resource: *r,
                        })
                    }
                }
            }
            let id = d.id;
            if by_id.insert(id, d).is_some() {
                return Err(AllocationError::DuplicateDemand(id));
            }
        }
        Ok(Self {
            capacities,
            demands: by_id,
            bidders,
        })
    }

    pub fn empty() -> Self {
        Self {
            capacities: BTreeMap::new(),
            demands: BTreeMap::new(),
            bidders: BTreeMap::new(),
        }
    }

    pub fn resource_ids(&self) -> impl Iterator<Item = ResourceId> + '_ {
        self.capacities.keys().copied()
    }

    pub fn demand_ids(&self) -> impl Iterator<Item = DemandId> + '_ {
        self.demands.keys().copied()
    }

    pub fn demands(&self) -> impl Iterator<Item = &Demand> {
        self.demands.values()
    }

    pub fn demand(&self, id: DemandId) -> Option<&Demand> {
        self.demands.get(&id)
    }

    pub fn capacity(&self, id: ResourceId) -> Option<f64> {
        self.capacities.get(&id).copied()
    }

    /// `D_j`: the demands that consume resource `id`.
    pub fn bidders(&self, id: ResourceId) -> impl Iterator<Item = DemandId> + '_ {
        self.bidders.get(&id).into_iter().flatten().copied()
    }

    pub fn num_resources(&self) -> usize {
        self.capacities.len()
    }

    pub fn num_demands(&self) -> usize {
        self.demands.len()
    }

    pub fn is_weighted(&self) -> bool {
        self.demands.values().any(|d| d.weight != 1)
    }

    /// Same problem with all capacities and magnitudes multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self, AllocationError> {
        let spec = ProblemSpec::from(self.clone());
        Self::new(
            spec.resources.into_iter().map(|mut r| {
                r.capacity *= factor;
                r
            }),
            spec.demands.into_iter().map(|mut d| {
                d.magnitude *= factor;
                d
            }),
        )
    }

    /// Total granted to each demand when `per_fragment` holds fragment values `u_i`.
    pub fn fragment_totals(&self, per_fragment: &Allocation) -> Allocation {
        per_fragment
            .iter()
            .map(|(id, u)| {
                let weight = self.demands.get(&id).map_or(1, |d| d.weight);
                (id, u * f64::from(weight))
            })
            .collect()
    }

    fn check_cover(&self, alloc: &Allocation) -> Result<(), AllocationError> {
        let missing: Vec<_> = self
            .demands
            .keys()
            .filter(|id| !alloc.values.contains_key(id))
            .copied()
            .collect();
        let extra: Vec<_> = alloc
            .values
            .keys()
            .filter(|id| !self.demands.contains_key(id))
            .copied()
            .collect();
        if missing.is_empty() && extra.is_empty() {
            Ok(())
        } else {
            Err(AllocationError::MismatchedDemands { missing, extra })
        }
    }

    /// Consumption at each resource when demand `i` uses `weight_i * values[i]`.
    fn loads(&self, alloc: &Allocation, weighted: bool) -> BTreeMap<ResourceId, f64> {
        self.bidders
            .iter()
            .map(|(&j, members)| {
                let load = members
                    .iter()
                    .map(|i| {
                        let w = if weighted {
                            f64::from(self.demands[i].weight)
                        } else {
                            1.0
                        };
                        w * alloc.values[i]
                    })
                    .sum();
                (j, load)
            })
            .collect()
    }
}

impl TryFrom<ProblemSpec> for AllocationProblem {
    type Error = AllocationError;

    fn try_from(spec: ProblemSpec) -> Result<Self, Self::Error> {
        Self::new(spec.resources, spec.demands)
    }
}

impl From<AllocationProblem> for ProblemSpec {
    fn from(p: AllocationProblem) -> Self {
        ProblemSpec {
            resources: p
                .capacities
                .iter()
                .map(|(&id, &capacity)| Resource { id, capacity })
                .collect(),
            demands: p.demands.into_values().collect(),
        }
    }
}

/// One node in the channel-allocation mapping: a transmitter (demand) and a
/// receiver (resource of capacity one) sharing an id.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelNode {
    pub id: u32,
    pub demand: f64,
    pub weight: u32,
    /// Receivers this transmitter reaches, excluding itself.
    pub receivers: BTreeSet<u32>,
}

/// Build the allocation problem for a wireless neighbourhood. Every node's
/// bidder also attends its own node's auction.
pub fn channel_problem(
    nodes: impl IntoIterator<Item = ChannelNode>,
) -> Result<AllocationProblem, AllocationError> {
    let nodes: Vec<ChannelNode> = nodes.into_iter().collect();
    let resources = nodes.iter().map(|n| Resource {
        id: ResourceId(n.id),
        capacity: 1.0,
    });
    let demands = nodes.iter().map(|n| Demand {
        id: DemandId(n.id),
        magnitude: n.demand,
        weight: n.weight,
        resources: n
            .receivers
            .iter()
            .chain(std::iter::once(&n.id))
            .map(|&r| ResourceId(r))
            .collect(),
    });
    AllocationProblem::new(resources, demands)
}

/// Granted capacity per demand.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Allocation {
    values: BTreeMap<DemandId, f64>,
}

impl Allocation {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, id: DemandId) -> Option<f64> {
        self.values.get(&id).copied()
    }

    pub fn insert(&mut self, id: DemandId, value: f64) {
        self.values.insert(id, value);
    }

    pub fn iter(&self) -> impl Iterator<Item = (DemandId, f64)> + '_ {
        self.values.iter().map(|(&k, &v)| (k, v))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Values in ascending order, for lexicographic comparison.
    pub fn sorted_values(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.values.values().copied().collect();
        v.sort_by(f64::total_cmp);
        v
    }

    /// Largest per-demand absolute difference; `None` when id sets differ.
    pub fn max_abs_diff(&self, other: &Allocation) -> Option<f64> {
        if self.values.len() != other.values.len() {
            return None;
        }
        let mut worst = 0.0f64;
        for (id, v) in &self.values {
            let o = other.values.get(id)?;
            worst = worst.max((v - o).abs());
        }
        Some(worst)
    }
}

impl FromIterator<(DemandId, f64)> for Allocation {
    fn from_iter<T: IntoIterator<Item = (DemandId, f64)>>(iter: T) -> Self {
        Self {
            values: iter.into_iter().collect(),
        }
    }
}

pub fn is_feasible(
    problem: &AllocationProblem,
    alloc: &Allocation,
    slack: f64,
) -> Result<bool, AllocationError> {
    feasible_impl(problem, alloc, slack, false)
}

fn feasible_impl(
    problem: &AllocationProblem,
    alloc: &Allocation,
    slack: f64,
    weighted: bool,
) -> Result<bool, AllocationError> {
    problem.check_cover(alloc)?;
    for (id, d) in &problem.demands {
        let s = alloc.values[id];
        let cap = if weighted {
            d.magnitude / f64::from(d.weight)
        } else {
            d.magnitude
        };
        if s < -slack || s > cap + slack {
            return Ok(false);
        }
    }
    let loads = problem.loads(alloc, weighted);
    Ok(loads
        .iter()
        .all(|(j, load)| *load <= problem.capacities[j] + slack))
}

/// Why a demand is (or is not) at its max-min value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status", content = "resource")]
pub enum DemandStatus {
    /// `s_i >= w_i`.
    Satisfied,
    /// Maximal among the demands of this saturated resource.
    Bottlenecked(ResourceId),
    /// Neither; the allocation is not max-min for this demand.
    Violating,
}

/// Per-demand max-min status. Feasibility is a precondition.
pub fn classify(
    problem: &AllocationProblem,
    alloc: &Allocation,
    slack: f64,
) -> Result<BTreeMap<DemandId, DemandStatus>, AllocationError> {
    classify_impl(problem, alloc, slack, false)
}

/// Per-demand status for a weighted problem whose allocation holds per-fragment values.
pub fn classify_weighted(
    problem: &AllocationProblem,
    per_fragment: &Allocation,
    slack: f64,
) -> Result<BTreeMap<DemandId, DemandStatus>, AllocationError> {
    classify_impl(problem, per_fragment, slack, true)
}

fn classify_impl(
    problem: &AllocationProblem,
    alloc: &Allocation,
    slack: f64,
    weighted: bool,
) -> Result<BTreeMap<DemandId, DemandStatus>, AllocationError> {
    if !feasible_impl(problem, alloc, slack, weighted)? {
        return Err(AllocationError::Infeasible);
    }
    let loads = problem.loads(alloc, weighted);
    let mut out = BTreeMap::new();
    for (id, d) in &problem.demands {
        let s = alloc.values[id];
        let target = if weighted {
            d.magnitude / f64::from(d.weight)
        } else {
            d.magnitude
        };
        let status = if s >= target - slack {
            DemandStatus::Satisfied
        } else {
            d.resources
                .iter()
                .find(|j| {
                    let saturated = loads[*j] >= problem.capacities[*j] - slack;
                    let max = problem.bidders[*j]
                        .iter()
                        .map(|k| alloc.values[k])
                        .fold(f64::NEG_INFINITY, f64::max);
                    saturated && s >= max - slack
                })
                .map_or(DemandStatus::Violating, |&j| DemandStatus::Bottlenecked(j))
        };
        out.insert(*id, status);
    }
    Ok(out)
}

/// Resources whose load is within `slack` of capacity. Resources with no
/// demands are never saturated.
pub fn saturated_resources(
    problem: &AllocationProblem,
    alloc: &Allocation,
    weighted: bool,
    slack: f64,
) -> Result<BTreeSet<ResourceId>, AllocationError> {
    problem.check_cover(alloc)?;
    Ok(problem
        .loads(alloc, weighted)
        .into_iter()
        .filter(|(j, load)| {
            !problem.bidders[j].is_empty() && *load >= problem.capacities[j] - slack
        })
        .map(|(j, _)| j)
        .collect())
}

pub fn is_lex_max_min(
    problem: &AllocationProblem,
    alloc: &Allocation,
    slack: f64,
) -> Result<bool, AllocationError> {
    Ok(classify(problem, alloc, slack)?
        .values()
        .all(|s| *s != DemandStatus::Violating))
}

/// Def. of weighted max-min over fragment values `u_i`; loads count `γ_i · u_i`.
pub fn is_weighted_lex_max_min(
    problem: &AllocationProblem,
    per_fragment: &Allocation,
    slack: f64,
) -> Result<bool, AllocationError> {
    Ok(classify_weighted(problem, per_fragment, slack)?
        .values()
        .all(|s| *s != DemandStatus::Violating))
}

/// Unweighted lexicographic max-min allocation. Weights in the problem are ignored.
pub fn solve_max_min(problem: &AllocationProblem) -> Allocation {
    progressive_fill(problem, false).0
}

/// Per-fragment allocation `u_i` of the weighted problem. Use
/// [`AllocationProblem::fragment_totals`] for per-demand totals.
pub fn solve_weighted_max_min(problem: &AllocationProblem) -> Allocation {
    progressive_fill(problem, true).0
}

/// Number of freeze rounds the filling took; exposed for the termination bound.
pub fn fill_rounds(problem: &AllocationProblem) -> usize {
    progressive_fill(problem, false).1
}

fn progressive_fill(problem: &AllocationProblem, weighted: bool) -> (Allocation, usize) {
    let rate_of = |d: &Demand| {
        if weighted {
            f64::from(d.weight)
        } else {
            1.0
        }
    };
    let ceiling_of = |d: &Demand| d.magnitude / rate_of(d);

    let mut values = BTreeMap::new();
    let mut active: BTreeSet<DemandId> = BTreeSet::new();
    for (id, d) in &problem.demands {
        if d.magnitude > 0.0 {
            active.insert(*id);
        } else {
            values.insert(*id, 0.0);
        }
    }
    // Consumption by frozen demands.
    let mut used: BTreeMap<ResourceId, f64> =
        problem.capacities.keys().map(|&j| (j, 0.0)).collect();
    let mut level = 0.0f64;
    let mut rounds = 0;

    while !active.is_empty() {
        rounds += 1;
        let mut rates: BTreeMap<ResourceId, f64> = BTreeMap::new();
        for id in &active {
            let d = &problem.demands[id];
            for j in &d.resources {
                *rates.entry(*j).or_default() += rate_of(d);
            }
        }
        let headroom =
            |j: &ResourceId, rate: f64, level: f64| problem.capacities[j] - used[j] - rate * level;

        let mut step = f64::INFINITY;
        for id in &active {
            step = step.min(ceiling_of(&problem.demands[id]) - level);
        }
        for (j, &rate) in &rates {
            step = step.min(headroom(j, rate, level) / rate);
        }
        level += step.max(0.0);

        let mut freeze: BTreeSet<DemandId> = BTreeSet::new();
        for id in &active {
            let ceiling = ceiling_of(&problem.demands[id]);
            if ceiling - level <= 1e-12 * (1.0 + ceiling) {
                freeze.insert(*id);
            }
        }
        for (j, &rate) in &rates {
            if headroom(j, rate, level) <= 1e-12 * (1.0 + problem.capacities[j]) {
                freeze.extend(problem.bidders[j].iter().filter(|i| active.contains(i)));
            }
        }
        if freeze.is_empty() {
            // Only reachable through rounding; freeze whatever is tightest.
            let tightest = active
                .iter()
                .min_by(|a, b| {
                    let slack = |id: &DemandId| {
                        let d = &problem.demands[id];
                        let own = ceiling_of(d) - level;
                        d.resources
                            .iter()
                            .map(|j| headroom(j, rates[j], level) / rates[j])
                            .fold(own, f64::min)
                    };
                    slack(a).total_cmp(&slack(b))
                })
                .copied()
                .expect("active set is non-empty");
            freeze.insert(tightest);
        }
        for id in freeze {
            active.remove(&id);
            let d = &problem.demands[&id];
            let value = level.min(ceiling_of(d)).max(0.0);
            for j in &d.resources {
                *used.get_mut(j).expect("validated resource") += rate_of(d) * value;
            }
            values.insert(id, value);
        }
    }
    (Allocation { values }, rounds)
}
