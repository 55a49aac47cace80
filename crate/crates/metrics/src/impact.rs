use std::collections::{BTreeMap, BTreeSet, VecDeque};

/// Hop count from the nearest of `sources` to every reachable node.
pub fn hop_distances(
    adjacency: &BTreeMap<u32, BTreeSet<u32>>,
    sources: &[u32],
) -> BTreeMap<u32, u32> {
    let mut dist = BTreeMap::new();
    let mut frontier = VecDeque::new();
    for &s in sources {
        if dist.insert(s, 0).is_none() {
            frontier.push_back(s);
        }
    }
    while let Some(u) = frontier.pop_front() {
        let d = dist[&u];
        for &v in adjacency.get(&u).into_iter().flatten() {
            if let std::collections::btree_map::Entry::Vacant(e) = dist.entry(v) {
                e.insert(d + 1);
                frontier.push_back(v);
            }
        }
    }
    dist
}

/// Mean hop distance over the nodes whose claim changed. Nodes unreachable
/// from the change are ignored; `None` means nothing reachable changed.
pub fn range_of_impact(
    changed: impl IntoIterator<Item = u32>,
    hops: &BTreeMap<u32, u32>,
) -> Option<f64> {
    let (sum, n) = changed
        .into_iter()
        .filter_map(|i| hops.get(&i))
        .fold((0u64, 0u64), |(s, n), &d| (s + u64::from(d), n + 1));
    (n > 0).then(|| sum as f64 / n as f64)
}
