//! Solvers for bundles of at most one item (radius 0, one ball), based on
//! maximum bipartite matching between agents and items.

use std::collections::BTreeSet;

use crate::model::{Allocation, Instance};

/// Bipartite graph with agents on one side and items on the other.
#[derive(Clone, Debug)]
pub struct AgentItemGraph {
    items: usize,
    adj: Vec<Vec<usize>>,
}

/// `agent_item[a]` is the item matched to agent `a`, if any.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Matching {
    pub agent_item: Vec<Option<usize>>,
    pub item_agent: Vec<Option<usize>>,
}

impl Matching {
    pub fn size(&self) -> usize {
        self.agent_item.iter().flatten().count()
    }
}

impl AgentItemGraph {
    /// Joins agent `a` to item `z` whenever `eligible(a, z)`.
    pub fn new(agents: usize, items: usize, eligible: impl Fn(usize, usize) -> bool) -> Self {
        let adj = (0..agents).map(|a| (0..items).filter(|&z| eligible(a, z)).collect()).collect();
        AgentItemGraph { items, adj }
    }

    pub fn agent_count(&self) -> usize {
        self.adj.len()
    }

    /// Maximum matching by repeated augmenting-path search.
    pub fn max_matching(&self) -> Matching {
        let mut m = Matching { agent_item: vec![None; self.adj.len()], item_agent: vec![None; self.items] };
        for a in 0..self.adj.len() {
            let mut visited = vec![false; self.items];
            self.augment(a, &mut visited, &mut m);
        }
        m
    }

    fn augment(&self, a: usize, visited: &mut [bool], m: &mut Matching) -> bool {
        for &z in &self.adj[a] {
            if visited[z] {
                continue;
            }
            visited[z] = true;
            let free = match m.item_agent[z] {
                None => true,
                Some(b) => self.augment(b, visited, m),
            };
            if free {
                m.agent_item[a] = Some(z);
                m.item_agent[z] = Some(a);
                return true;
            }
        }
        false
    }

    /// For a maximum matching that leaves some agent unmatched: the agents
    /// reachable from unmatched agents by alternating paths, and their
    /// neighbourhood. The neighbourhood is strictly smaller than the agent set.
    pub fn hall_violator(&self, matching: &Matching) -> Option<(Vec<usize>, Vec<usize>)> {
        let mut agent_seen = vec![false; self.adj.len()];
        let mut item_seen = vec![false; self.items];
        let mut stack: Vec<usize> = (0..self.adj.len()).filter(|&a| matching.agent_item[a].is_none()).collect();
        if stack.is_empty() {
            return None;
        }
        for &a in &stack {
            agent_seen[a] = true;
        }
        while let Some(a) = stack.pop() {
            for &z in &self.adj[a] {
                if std::mem::replace(&mut item_seen[z], true) {
                    continue;
                }
                if let Some(b) = matching.item_agent[z] {
                    if !std::mem::replace(&mut agent_seen[b], true) {
                        stack.push(b);
                    }
                }
            }
        }
        let agents: Vec<usize> = (0..self.adj.len()).filter(|&a| agent_seen[a]).collect();
        let items: Vec<usize> = (0..self.items).filter(|&z| item_seen[z]).collect();
        debug_assert!(items.len() < agents.len());
        Some((agents, items))
    }
}

/// Allocation giving each matched agent its item; `None` unless every agent
/// in `required` is matched.
fn matched_allocation(matching: &Matching, required: impl Fn(usize) -> bool) -> Option<Allocation> {
    let n = matching.agent_item.len();
    if (0..n).any(|a| required(a) && matching.agent_item[a].is_none()) {
        return None;
    }
    Some(Allocation::from_bundles(
        matching.agent_item.iter().map(|z| z.iter().copied().collect::<BTreeSet<_>>()).collect(),
    ))
}

/// Proportional allocation with at most one item per agent. Agent `i` may
/// take item `z` when `n · v_i(z) ≥ W_i`; agents with `W_i = 0` are satisfied
/// by an empty bundle and need not be matched.
pub fn solve_prop_10(instance: &Instance) -> Option<Allocation> {
    let n = instance.agent_count() as u64;
    let graph = AgentItemGraph::new(instance.agent_count(), instance.item_count(), |a, z| {
        n * instance.value(a, z) >= instance.total(a)
    });
    matched_allocation(&graph.max_matching(), |a| instance.total(a) > 0)
}

/// Maximin share for single-item bundles: the agent's `n`-th largest item
/// value, or 0 when there are fewer items than agents.
pub fn mms_10(instance: &Instance, agent: usize) -> u64 {
    let n = instance.agent_count();
    if instance.item_count() < n {
        return 0;
    }
    let mut row = instance.values()[agent].clone();
    row.sort_unstable_by(|a, b| b.cmp(a));
    row[n - 1]
}

/// Maximin-fair allocation with at most one item per agent. Agents whose
/// share is 0 need not be matched.
pub fn solve_mms_10(instance: &Instance) -> Option<Allocation> {
    let shares: Vec<u64> = (0..instance.agent_count()).map(|a| mms_10(instance, a)).collect();
    let graph = AgentItemGraph::new(instance.agent_count(), instance.item_count(), |a, z| {
        instance.value(a, z) >= shares[a]
    });
    matched_allocation(&graph.max_matching(), |a| shares[a] > 0)
}

/// Envy-free allocation giving every agent exactly one item. Repeatedly
/// matches agents to their favourite remaining items; when that fails, the
/// items adjacent to a Hall violator are discarded.
pub fn solve_ef_one_item(instance: &Instance) -> Option<Allocation> {
    let n = instance.agent_count();
    let mut alive = vec![true; instance.item_count()];
    loop {
        if alive.iter().filter(|&&a| a).count() < n {
            return None;
        }
        let best: Vec<u64> = (0..n)
            .map(|a| (0..alive.len()).filter(|&z| alive[z]).map(|z| instance.value(a, z)).max().unwrap_or(0))
            .collect();
        let graph = AgentItemGraph::new(n, alive.len(), |a, z| alive[z] && instance.value(a, z) == best[a]);
        let matching = graph.max_matching();
        if matching.size() == n {
            return matched_allocation(&matching, |_| true);
        }
        let (_, items) = graph.hall_violator(&matching).expect("an agent is unmatched");
        for z in items {
            alive[z] = false;
        }
    }
}
