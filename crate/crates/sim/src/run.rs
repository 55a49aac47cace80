use std::collections::{BTreeMap, BTreeSet};

use atlas_core::react::Weight;
use atlas_mac::{Heard, MacPacket, NodeRuntime, PacketKind, ReceiverMode};
use atlas_metrics::{
    hop_distances, range_of_impact, ConvergenceTracker, DelayStats, MetricsReport, WindowedError,
};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    adjacency, generate_topology, in_range, scripted_link_change, LinkDrift, Point, RandomWaypoint,
};
use crate::scenario::{
    DemandChangeKind, DemandModel, Event, Mobility, Scenario, ScenarioError, Topology,
};
use crate::truth::GroundTruth;

/// Slack of the final max-min audit, in claim units.
pub const AUDIT_SLACK: f64 = 3.0 / 255.0;

/// A claim change larger than one grid step counts as a response.
const IMPACT_THRESHOLD: f64 = 1.0 / 255.0 + 1e-9;

const STREAM_TOPOLOGY: u64 = 1;
const STREAM_TRAFFIC: u64 = 2;
const STREAM_MOBILITY: u64 = 3;
const STREAM_EVENT: u64 = 4;
const NODE_SEED_SALT: u64 = 0x51_7c_c1_b7_27_22_0a_95;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("could not place a clean link change after {0} attempts")]
    Placement(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClaimFrame {
    pub time: f64,
    pub claims: BTreeMap<u32, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeSummary {
    pub id: u32,
    pub demand: f64,
    pub weight: u32,
    pub claim: f64,
    pub oracle: f64,
    pub persistence: f64,
    pub delay: DelayStats,
    pub delivered: u64,
    pub mac_drops: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunOutput {
    pub report: MetricsReport,
    pub nodes: Vec<NodeSummary>,
    pub claims: Vec<ClaimFrame>,
    pub trace: Vec<String>,
    /// Broken simulator invariants, each with the slot it was found in.
    pub violations: Vec<String>,
}

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

struct World {
    s: Scenario,
    ids: Vec<u32>,
    index_of: BTreeMap<u32, usize>,
    nodes: Vec<NodeRuntime>,
    positions: Vec<Point>,
    adj: Vec<BTreeSet<usize>>,
    dest: Vec<Vec<u32>>,
    waypoint: Option<RandomWaypoint>,
    drift: Option<LinkDrift>,
    mobility_rng: ChaCha8Rng,
    /// Node and new rate of a scripted demand change.
    demand_change: Option<(usize, f64)>,
    rates: Vec<f64>,
    credit: Vec<f64>,
    truth: GroundTruth,
    truth_dirty: bool,
    /// Each node's traffic destinations as of the last truth rebuild.
    destinations: Vec<BTreeSet<u32>>,
    /// Last slot each node decoded anything from each other node.
    heard: Vec<BTreeMap<usize, u64>>,
    collisions: u64,
    link_changes: u64,
    trace: Vec<String>,
    violations: Vec<String>,
}

impl World {
    fn new(s: &Scenario) -> Result<Self, SimError> {
        s.validate()?;
        let mut topo_rng = rng(s.seed, STREAM_TOPOLOGY);
        let mut traffic_rng = rng(s.seed, STREAM_TRAFFIC);
        let mut mobility_rng = rng(s.seed, STREAM_MOBILITY);
        let slot = s.node.slot_len;

        let mut drift = None;
        let (ids, positions, adj, rates, weights) = match &s.topology {
            Topology::Random => {
                let n = s.nodes;
                let positions = match s.event {
                    Event::LinkChange {
                        time,
                        add,
                        speed,
                        margin,
                    } => {
                        let attempts = 10_000;
                        let (pts, d) = scripted_link_change(
                            &mut topo_rng,
                            n,
                            s.width,
                            s.height,
                            s.range,
                            add,
                            time,
                            speed,
                            margin,
                            attempts,
                        )
                        .ok_or(SimError::Placement(attempts))?;
                        drift = Some(d);
                        pts
                    }
                    _ => generate_topology(&mut topo_rng, n, s.width, s.height),
                };
                let loaded = (s.traffic.loaded_fraction * n as f64).round() as usize;
                let mut rates = vec![0.0; n];
                for i in index::sample(&mut traffic_rng, n, loaded) {
                    rates[i] = traffic_rng.gen_range(s.traffic.rate.min..=s.traffic.rate.max);
                }
                let [lo, hi] = s.traffic.weights;
                let weights: Vec<u32> = (0..n).map(|_| traffic_rng.gen_range(lo..=hi)).collect();
                let adj = adjacency(&positions, s.range);
                ((0..n as u32).collect(), positions, adj, rates, weights)
            }
            Topology::Graph { nodes, links } => {
                let ids: Vec<u32> = nodes.iter().map(|n| n.id).collect();
                let at: BTreeMap<u32, usize> =
                    ids.iter().enumerate().map(|(k, &id)| (id, k)).collect();
                let mut adj = vec![BTreeSet::new(); ids.len()];
                for [a, b] in links {
                    adj[at[a]].insert(at[b]);
                    adj[at[b]].insert(at[a]);
                }
                let rates = nodes.iter().map(|n| n.demand / slot).collect();
                let weights = nodes.iter().map(|n| n.weight).collect();
                let origin = Point { x: 0.0, y: 0.0 };
                (ids.clone(), vec![origin; ids.len()], adj, rates, weights)
            }
        };
        let mut positions = positions;
        if let Some(d) = &drift {
            positions[d.mover] = d.position(0.0);
        }
        let waypoint = match s.mobility {
            Mobility::RandomWaypoint { speed, warmup } if speed > 0.0 => {
                let mut m =
                    RandomWaypoint::new(&mut mobility_rng, ids.len(), speed, s.width, s.height);
                m.warm_up(&mut positions, warmup, &mut mobility_rng);
                Some(m)
            }
            _ => None,
        };
        let adj = if waypoint.is_some() || drift.is_some() {
            adjacency(&positions, s.range)
        } else {
            adj
        };

        let mut rates = rates;
        let demand_change = match s.event {
            Event::DemandChange { change, rate, .. } => {
                let mut event_rng = rng(s.seed, STREAM_EVENT);
                let class = rate.unwrap_or(s.traffic.rate);
                let idle: Vec<usize> = (0..rates.len()).filter(|&i| rates[i] == 0.0).collect();
                let busy: Vec<usize> = (0..rates.len()).filter(|&i| rates[i] > 0.0).collect();
                // Removing a source of a class the background lacks: start an idle
                // node in that class and remove it at the event.
                let pool = match change {
                    DemandChangeKind::Add => &idle,
                    DemandChangeKind::Remove if rate.is_none() => &busy,
                    DemandChangeKind::Remove => &idle,
                };
                let all: Vec<usize> = (0..rates.len()).collect();
                let pool = if pool.is_empty() { &all } else { pool };
                let i = pool[event_rng.gen_range(0..pool.len())];
                let drawn = event_rng.gen_range(class.min..=class.max);
                match change {
                    DemandChangeKind::Add => {
                        rates[i] = 0.0;
                        Some((i, drawn))
                    }
                    DemandChangeKind::Remove => {
                        if rate.is_some() {
                            rates[i] = drawn;
                        }
                        Some((i, 0.0))
                    }
                }
            }
            _ => None,
        };

        let weighted = s.node.weighted;
        let demands: Vec<f64> = rates.iter().map(|r: &f64| (r * slot).min(1.0)).collect();
        let mut nodes = Vec::with_capacity(ids.len());
        for (k, &id) in ids.iter().enumerate() {
            let mut node =
                NodeRuntime::new(id, s.node.clone(), s.seed ^ NODE_SEED_SALT).map_err(|e| {
                    ScenarioError::Invalid {
                        field: "node".into(),
                        message: e.to_string(),
                    }
                })?;
            if weighted {
                node.set_weight(Weight::new(weights[k]).expect("validated weight"));
            }
            match s.traffic.demand {
                DemandModel::Nominal => node.set_demand(demands[k]),
                DemandModel::Estimated => node.estimate_demand_from_queue(u64::from(s.node.v)),
            }
            nodes.push(node);
        }
        let credit = (0..ids.len()).map(|_| traffic_rng.gen::<f64>()).collect();
        let truth = GroundTruth::new(ids.clone(), weighted, demands, weights);
        let mut w = Self {
            ids: ids.clone(),
            index_of: ids.iter().enumerate().map(|(k, &id)| (id, k)).collect(),
            nodes,
            dest: Vec::new(),
            positions,
            adj,
            waypoint,
            drift,
            mobility_rng,
            demand_change,
            rates,
            credit,
            truth,
            truth_dirty: true,
            destinations: vec![BTreeSet::new(); ids.len()],
            heard: vec![BTreeMap::new(); ids.len()],
            collisions: 0,
            link_changes: 0,
            trace: Vec::new(),
            violations: Vec::new(),
            s: s.clone(),
        };
        w.refresh_destinations();
        w.rebuild_truth();
        Ok(w)
    }

    fn n(&self) -> usize {
        self.ids.len()
    }

    fn refresh_destinations(&mut self) {
        self.dest = self
            .adj
            .iter()
            .map(|a| a.iter().map(|&j| self.ids[j]).collect())
            .collect();
    }

    fn receivers(&self) -> Vec<BTreeSet<usize>> {
        match self.s.node.receiver_mode {
            ReceiverMode::Physical => self.adj.clone(),
            ReceiverMode::Mac => (0..self.n())
                .map(|i| {
                    let d = &self.destinations[i];
                    self.adj[i]
                        .iter()
                        .copied()
                        .filter(|&j| d.contains(&self.ids[j]))
                        .collect()
                })
                .collect(),
        }
    }

    fn rebuild_truth(&mut self) {
        let receivers = self.receivers();
        self.truth.rebuild(&receivers);
        self.truth_dirty = false;
    }

    /// Replace the adjacency and count the links that changed.
    fn set_adjacency(&mut self, adj: Vec<BTreeSet<usize>>) {
        let mut changed = 0;
        for i in 0..self.n() {
            changed += self.adj[i].symmetric_difference(&adj[i]).count();
        }
        if changed > 0 {
            self.link_changes += changed as u64 / 2;
            self.adj = adj;
            self.refresh_destinations();
            self.truth_dirty = true;
        }
    }

    fn move_nodes(&mut self, now: u64) {
        let slot = self.s.node.slot_len;
        if let Some(m) = &mut self.waypoint {
            m.advance(&mut self.positions, slot, &mut self.mobility_rng);
            let adj = adjacency(&self.positions, self.s.range);
            self.set_adjacency(adj);
        }
        if let Some(d) = self.drift {
            let t = now as f64 * slot;
            if t >= d.start && t <= d.end + slot {
                self.positions[d.mover] = d.position(t);
                let mut adj = self.adj.clone();
                let m = d.mover;
                for j in 0..self.n() {
                    if j == m {
                        continue;
                    }
                    if in_range(self.positions[m], self.positions[j], self.s.range) {
                        adj[m].insert(j);
                        adj[j].insert(m);
                    } else {
                        adj[m].remove(&j);
                        adj[j].remove(&m);
                    }
                }
                self.set_adjacency(adj);
            }
        }
    }

    /// Apply the scripted event; returns the nodes at hop distance zero.
    fn apply_event(&mut self) -> Vec<usize> {
        match self.s.event.clone() {
            Event::None => Vec::new(),
            Event::DemandChange { .. } => {
                let (i, rate) = self.demand_change.expect("chosen at start");
                self.rates[i] = rate;
                let w = (rate * self.s.node.slot_len).min(1.0);
                self.truth.set_demand(i, w);
                if self.s.traffic.demand == DemandModel::Nominal {
                    self.nodes[i].set_demand(w);
                }
                self.truth_dirty = true;
                vec![i]
            }
            Event::LinkChange { .. } => {
                let d = self.drift.expect("link change has a drift");
                vec![d.anchor, d.mover]
            }
            Event::AddLink { a, b, .. } => {
                let ia = self.ids.iter().position(|&x| x == a).expect("validated");
                let ib = self.ids.iter().position(|&x| x == b).expect("validated");
                let mut adj = self.adj.clone();
                adj[ia].insert(ib);
                adj[ib].insert(ia);
                self.set_adjacency(adj);
                vec![ia, ib]
            }
        }
    }

    fn arrivals(&mut self, now: u64) {
        let slot = self.s.node.slot_len;
        for i in 0..self.n() {
            if self.rates[i] <= 0.0 {
                continue;
            }
            self.credit[i] += self.rates[i] * slot;
            while self.credit[i] >= 1.0 {
                self.credit[i] -= 1.0;
                self.nodes[i].enqueue(now, &self.dest[i]);
            }
        }
    }

    fn hear(&mut self, now: u64, listener: usize, from: usize, heard: Heard) {
        self.heard[listener].insert(from, now);
        self.nodes[listener].on_hear(now, heard);
    }

    fn step(&mut self, now: u64) {
        for node in &mut self.nodes {
            node.begin_slot(now);
        }
        let tx: Vec<Option<MacPacket>> = (0..self.n())
            .map(|i| {
                let dest = &self.dest[i];
                self.nodes[i].on_slot(now, dest)
            })
            .collect();
        if tx.iter().all(Option::is_none) {
            return;
        }
        // Data phase.
        let mut acks: Vec<Option<(usize, atlas_mac::Ack)>> = vec![None; self.n()];
        let mut acker = vec![false; self.n()];
        let mut decoded = vec![false; self.n()];
        for l in 0..self.n() {
            if tx[l].is_some() {
                continue;
            }
            let mut senders = self.adj[l].iter().filter(|&&j| tx[j].is_some());
            let (Some(&t), second) = (senders.next(), senders.next()) else {
                continue;
            };
            if second.is_some() {
                self.collisions += 1;
                if self.s.trace {
                    let all: Vec<String> = self.adj[l]
                        .iter()
                        .filter(|&&j| tx[j].is_some())
                        .map(|&j| self.ids[j].to_string())
                        .collect();
                    self.trace.push(format!(
                        "slot={now} collision at={} transmitters={}",
                        self.ids[l],
                        all.join(",")
                    ));
                }
                continue;
            }
            let p = tx[t].expect("transmitter");
            decoded[l] = true;
            self.hear(
                now,
                l,
                t,
                Heard {
                    from: p.src,
                    to: p.dst,
                    header: p.header,
                    ack: false,
                },
            );
            if p.kind == PacketKind::Data && p.dst == Some(self.ids[l]) {
                let ack = self.nodes[l].make_ack(&p);
                acks[t] = Some((l, ack));
                acker[l] = true;
            }
        }

        // Ack phase: senders always decode their own ack.
        for t in 0..self.n() {
            let Some(p) = tx[t] else { continue };
            if p.kind != PacketKind::Data {
                continue;
            }
            let dst = self.index_of[&p.dst.expect("data is addressed")];
            let acked = match acks[t] {
                Some((l, ack)) => {
                    self.hear(
                        now,
                        t,
                        l,
                        Heard {
                            from: ack.src,
                            to: Some(ack.dst),
                            header: ack.header,
                            ack: true,
                        },
                    );
                    true
                }
                None => false,
            };
            self.nodes[t].on_ack_result(now, acked);
            if self.s.trace {
                self.trace.push(format!(
                    "slot={now} tx={} dst={} retry={} outcome={}",
                    p.src,
                    self.ids[dst],
                    p.retry,
                    if acked { "acked" } else { "lost" }
                ));
            }
        }
        if acker.iter().any(|&a| a) {
            for z in 0..self.n() {
                // One decoded frame per node per slot.
                if acker[z] || decoded[z] || tx[z].is_some_and(|p| p.kind == PacketKind::Data) {
                    continue;
                }
                let mut near = self.adj[z].iter().filter(|&&y| acker[y]);
                let (Some(&y), None) = (near.next(), near.next()) else {
                    continue;
                };
                let ack = acks
                    .iter()
                    .flatten()
                    .find(|(l, _)| *l == y)
                    .map(|(_, a)| *a)
                    .expect("acker has an ack");
                self.hear(
                    now,
                    z,
                    y,
                    Heard {
                        from: ack.src,
                        to: Some(ack.dst),
                        header: ack.header,
                        ack: true,
                    },
                );
            }
        }
    }

    fn track_destinations(&mut self) {
        if self.s.node.receiver_mode != ReceiverMode::Mac {
            return;
        }
        for i in 0..self.n() {
            let d = self.nodes[i].destinations();
            if d != self.destinations[i] {
                self.destinations[i] = d;
                self.truth_dirty = true;
            }
        }
    }

    fn check_conservation(&mut self, now: u64) -> bool {
        let mut ok = true;
        for n in &self.nodes {
            let s = n.stats();
            let accounted = s.delivered + s.mac_drops + s.overflow_drops + n.queue_len() as u64;
            if accounted != s.arrivals {
                ok = false;
                self.violations.push(format!(
                    "slot={now} node={} conservation: arrivals {} != delivered {} + mac drops {} + overflow {} + queued {}",
                    n.id(),
                    s.arrivals,
                    s.delivered,
                    s.mac_drops,
                    s.overflow_drops,
                    n.queue_len()
                ));
            }
        }
        ok
    }

    fn check_neighbour_tables(&mut self, now: u64) {
        let horizon = self.s.node.lost_nbr_slots();
        for i in 0..self.n() {
            let expected: BTreeSet<u32> = self.heard[i]
                .iter()
                .filter(|(_, &t)| now.saturating_sub(t) <= horizon)
                .map(|(&j, _)| self.ids[j])
                .collect();
            let actual: BTreeSet<u32> = self.nodes[i].neighbours().ids().collect();
            if expected != actual {
                self.violations.push(format!(
                    "slot={now} node={} neighbour table {:?} != heard {:?}",
                    self.ids[i], actual, expected
                ));
            }
        }
    }

    fn claims(&self) -> Vec<f64> {
        self.nodes.iter().map(NodeRuntime::claim).collect()
    }

    fn within_tolerance(&self) -> bool {
        let tol = self.s.tolerance + 1e-9;
        (0..self.n()).all(|i| {
            self.truth.demand(i) <= 0.0
                || (self.nodes[i].claim() - self.truth.target(i)).abs() <= tol
        })
    }

    /// Persistence a node can actually use: eager persistences above the
    /// demand leave the excess idle.
    fn effective_persistence(&self, i: usize) -> f64 {
        self.nodes[i].persistence().min(self.truth.demand(i))
    }
}

/// A scenario in progress, advanced one slot at a time.
pub struct Simulation {
    w: World,
    now: u64,
    slots: u64,
    event_slot: Option<u64>,
    init: ConvergenceTracker,
    after: Option<ConvergenceTracker>,
    windows: WindowedError,
    snapshot: Option<(Vec<f64>, BTreeMap<u32, u32>)>,
    claims_log: Vec<ClaimFrame>,
    conservation_ok: bool,
}

impl Simulation {
    pub fn new(s: &Scenario) -> Result<Self, SimError> {
        let w = World::new(s)?;
        Ok(Self {
            w,
            now: 0,
            slots: s.slots(),
            event_slot: s.event.time().map(|t| (t / s.node.slot_len).round() as u64),
            init: ConvergenceTracker::new(0),
            after: None,
            windows: WindowedError::new(),
            snapshot: None,
            claims_log: Vec::new(),
            conservation_ok: true,
        })
    }

    /// Next slot to run.
    pub fn now(&self) -> u64 {
        self.now
    }

    pub fn is_finished(&self) -> bool {
        self.now >= self.slots
    }

    pub fn ids(&self) -> &[u32] {
        &self.w.ids
    }

    pub fn nodes(&self) -> &[NodeRuntime] {
        &self.w.nodes
    }

    pub fn truth(&self) -> &GroundTruth {
        &self.w.truth
    }

    /// Current in-range sets by node index.
    pub fn adjacency(&self) -> &[BTreeSet<usize>] {
        &self.w.adj
    }

    pub fn positions(&self) -> &[Point] {
        &self.w.positions
    }

    /// Receiver sets the oracle is currently built from, by node index.
    pub fn truth_receivers(&self) -> Vec<BTreeSet<usize>> {
        self.w.receivers()
    }

    pub fn step(&mut self) {
        let now = self.now;
        let w = &mut self.w;
        let slot = w.s.node.slot_len;
        let v = u64::from(w.s.node.v);
        w.move_nodes(now);
        if Some(now) == self.event_slot {
            let before = w.claims();
            let sources = w.apply_event();
            let mut adj: BTreeMap<u32, BTreeSet<u32>> = (0..w.n())
                .map(|i| (i as u32, w.adj[i].iter().map(|&j| j as u32).collect()))
                .collect();
            if let [a, b] = sources[..] {
                adj.entry(a as u32).or_default().insert(b as u32);
                adj.entry(b as u32).or_default().insert(a as u32);
            }
            let src: Vec<u32> = sources.iter().map(|&i| i as u32).collect();
            self.snapshot = Some((before, hop_distances(&adj, &src)));
            self.after = Some(ConvergenceTracker::new(now));
        }
        w.arrivals(now);
        w.step(now);
        w.track_destinations();
        if w.truth_dirty {
            w.rebuild_truth();
        }

        let ok = w.within_tolerance();
        match &mut self.after {
            Some(t) => t.observe(now, ok),
            None => self.init.observe(now, ok),
        }
        for i in 0..w.n() {
            self.windows.sample(i as u32, w.effective_persistence(i));
        }
        if now % v == v - 1 {
            let truth = &w.truth;
            self.windows.close(now, |i| truth.total(i as usize));
            if w.s.record_claims {
                self.claims_log.push(ClaimFrame {
                    time: (now + 1) as f64 * slot,
                    claims: w.ids.iter().copied().zip(w.claims()).collect(),
                });
            }
            w.check_neighbour_tables(now);
        }
        self.conservation_ok &= w.check_conservation(now);
        self.now += 1;
    }

    pub fn finish(self) -> RunOutput {
        let Simulation {
            mut w,
            slots,
            event_slot,
            init,
            after,
            windows,
            snapshot,
            claims_log,
            conservation_ok,
            ..
        } = self;
        let s = w.s.clone();
        let slot = s.node.slot_len;
        let claims = w.claims();
        let end = slots.saturating_sub(1);
        let init_time = init.time(slot);
        let init_until = init.converged_slot().unwrap_or(event_slot.unwrap_or(end));
        let init_err = windows.result(0, init_until);
        let (event_time, event_err) = match &after {
            Some(t) => {
                let until = t.converged_slot().unwrap_or(end);
                (Some(t.time(slot)), Some(windows.result(t.start(), until)))
            }
            None => (None, None),
        };
        let (impact, impacted) = match &snapshot {
            Some((before, hops)) => {
                let changed: Vec<u32> = (0..w.n())
                    .filter(|&i| (claims[i] - before[i]).abs() > IMPACT_THRESHOLD)
                    .map(|i| i as u32)
                    .collect();
                (
                    range_of_impact(changed.iter().copied(), hops),
                    changed.len(),
                )
            }
            None => (None, 0),
        };
        let final_error = (0..w.n())
            .filter(|&i| w.truth.demand(i) > 0.0)
            .map(|i| (claims[i] - w.truth.target(i)).abs())
            .fold(0.0, f64::max);

        let per_node: Vec<NodeSummary> = (0..w.n())
            .map(|i| {
                let st = w.nodes[i].stats();
                NodeSummary {
                    id: w.ids[i],
                    demand: w.truth.demand(i),
                    weight: w.truth.weight(i),
                    claim: claims[i],
                    oracle: w.truth.target(i),
                    persistence: w.nodes[i].persistence(),
                    delay: DelayStats::from_sums(st.delay_count, st.delay_sum, st.delay_sum_sq),
                    delivered: st.delivered,
                    mac_drops: st.mac_drops,
                }
            })
            .collect();
        let delays: Vec<DelayStats> = per_node.iter().map(|n| n.delay).collect();
        let (delay_mean, delay_var) = MetricsReport::aggregate_delays(&delays);
        let duration = slots as f64 * slot;
        let sum = |f: &dyn Fn(&atlas_mac::NodeStats) -> u64| -> u64 {
            w.nodes.iter().map(|n| f(n.stats())).sum()
        };
        let report = MetricsReport {
            seed: s.seed,
            nodes: w.n(),
            duration_s: duration,
            event: s.event.name().to_string(),
            init_convergence_s: init_time,
            event_convergence_s: event_time,
            excess_error: init_err.excess,
            deficit_error: init_err.deficit,
            event_excess_error: event_err.map(|e| e.excess),
            event_deficit_error: event_err.map(|e| e.deficit),
            throughput_pps: sum(&|st| st.delivered) as f64 / duration,
            delay_mean_s: delay_mean,
            delay_variance_s2: delay_var,
            mac_drops: sum(&|st| st.mac_drops),
            overflow_drops: sum(&|st| st.overflow_drops),
            range_of_impact_hops: impact,
            impacted_nodes: impacted,
            final_max_claim_error: final_error,
            final_lex_max_min: w.truth.audit(&claims, AUDIT_SLACK + 1e-9),
            conservation_ok,
            collisions: w.collisions,
            oracle_updates: w.truth.updates(),
            neighbour_changes: w.link_changes,
            neighbour_change_rate: 2.0 * w.link_changes as f64 / (w.n() as f64 * duration),
        };
        RunOutput {
            report,
            nodes: per_node,
            claims: claims_log,
            trace: std::mem::take(&mut w.trace),
            violations: std::mem::take(&mut w.violations),
        }
    }
}

pub fn run_scenario(s: &Scenario) -> Result<RunOutput, SimError> {
    let mut sim = Simulation::new(s)?;
    while !sim.is_finished() {
        sim.step();
    }
    Ok(sim.finish())
}
