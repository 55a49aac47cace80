use std::collections::BTreeMap;

/// Nodes heard within the last `timeout` slots.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NeighbourTable {
    timeout: u64,
    last_heard: BTreeMap<u32, u64>,
}

impl NeighbourTable {
    pub fn new(timeout_slots: u64) -> Self {
        Self {
            timeout: timeout_slots,
            last_heard: BTreeMap::new(),
        }
    }

    /// Refresh `id` at slot `now`; true if it was not a neighbour before.
    pub fn hear(&mut self, id: u32, now: u64) -> bool {
        self.last_heard.insert(id, now).is_none()
    }

    /// Remove neighbours silent for more than the timeout and return them.
    pub fn expire(&mut self, now: u64) -> Vec<u32> {
        let timeout = self.timeout;
        let lost: Vec<u32> = self
            .last_heard
            .iter()
            .filter(|(_, &t)| now.saturating_sub(t) > timeout)
            .map(|(&id, _)| id)
            .collect();
        for id in &lost {
            self.last_heard.remove(id);
        }
        lost
    }

    pub fn contains(&self, id: u32) -> bool {
        self.last_heard.contains_key(&id)
    }

    pub fn last_heard(&self, id: u32) -> Option<u64> {
        self.last_heard.get(&id).copied()
    }

    pub fn ids(&self) -> impl Iterator<Item = u32> + '_ {
        self.last_heard.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.last_heard.len()
    }

    pub fn is_empty(&self) -> bool {
        self.last_heard.is_empty()
    }
}
