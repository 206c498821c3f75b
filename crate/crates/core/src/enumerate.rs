//! Enumeration of compact allocations through their centers: every compact
//! bundle lies inside the union of at most `α` balls of radius `β`, so on
//! graphs of bounded degree the candidate bundles are few.

use std::collections::{BTreeSet, HashMap};

use itertools::Itertools;

use crate::compactness::{ball_unchecked, is_compact_bundle};
use crate::error::{Error, Result};
use crate::fairness::{dominates, max_unconstrained_welfare};
use crate::model::{Allocation, CompactnessSpec, FairnessGoal, Instance};

/// Limits on the enumeration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EnumBudget {
    /// Subsets examined while collecting candidate bundles.
    pub max_subsets: u64,
    /// Allocations visited per pass.
    pub max_allocations: u64,
}

impl Default for EnumBudget {
    fn default() -> Self {
        EnumBudget { max_subsets: 1 << 22, max_allocations: 1 << 24 }
    }
}

/// Largest union of balls whose subsets are examined.
const MAX_REGION: usize = 30;

/// All non-empty bundles (as item bitmasks, ascending) whose induced subgraph
/// has the shape required by `spec`.
pub fn compact_bundles(instance: &Instance, spec: &CompactnessSpec, budget: &EnumBudget) -> Result<Vec<u64>> {
    let graph = instance.graph();
    let m = graph.vertex_count();
    if m > 64 {
        return Err(Error::Unsupported("enumeration handles at most 64 items".into()));
    }
    let balls: Vec<u64> = (0..m)
        .map(|z| ball_unchecked(graph, z, spec.beta).iter().fold(0u64, |acc, &v| acc | 1 << v))
        .collect();
    let mut verdict: HashMap<u64, bool> = HashMap::new();
    let mut examined = 0u64;
    for k in 1..=spec.alpha.min(m) {
        for centers in (0..m).combinations(k) {
            let region = centers.iter().fold(0u64, |acc, &c| acc | balls[c]);
            let items: Vec<usize> = (0..m).filter(|&z| region >> z & 1 == 1).collect();
            if items.len() > MAX_REGION {
                return Err(Error::BudgetExceeded(format!("a ball union has {} items", items.len())));
            }
            examined += 1u64 << items.len();
            if examined > budget.max_subsets {
                return Err(Error::BudgetExceeded(format!(
                    "more than {} candidate subsets",
                    budget.max_subsets
                )));
            }
            for sub in 1u64..1 << items.len() {
                let mask = (0..items.len())
                    .filter(|&b| sub >> b & 1 == 1)
                    .fold(0u64, |acc, b| acc | 1 << items[b]);
                verdict.entry(mask).or_insert_with(|| {
                    let bundle: Vec<usize> = (0..m).filter(|&z| mask >> z & 1 == 1).collect();
                    is_compact_bundle(graph, &bundle, spec)
                });
            }
        }
    }
    let mut out: Vec<u64> = verdict.into_iter().filter(|&(_, ok)| ok).map(|(mask, _)| mask).collect();
    out.sort_unstable();
    Ok(out)
}

/// Iterator over tuples of pairwise disjoint candidate bundles (one per
/// agent, possibly empty), in lexicographic order of candidate indices.
pub struct CompactAllocations {
    candidates: Vec<u64>,
    /// `choice[i] = 0` is the empty bundle, `k > 0` is `candidates[k - 1]`.
    choice: Vec<usize>,
    /// Items used by agents before `i`.
    used: Vec<u64>,
    started: bool,
    done: bool,
}

impl CompactAllocations {
    pub fn new(candidates: Vec<u64>, agents: usize) -> Self {
        CompactAllocations { candidates, choice: vec![0; agents], used: vec![0; agents], started: false, done: false }
    }

    fn mask(&self, k: usize) -> u64 {
        if k == 0 {
            0
        } else {
            self.candidates[k - 1]
        }
    }

    /// Advances to the next tuple, returning the chosen masks.
    fn step(&mut self) -> Option<Vec<u64>> {
        if self.done {
            return None;
        }
        let n = self.choice.len();
        if !self.started {
            self.started = true;
        } else {
            let mut i = n;
            loop {
                if i == 0 {
                    self.done = true;
                    return None;
                }
                i -= 1;
                let next = (self.choice[i] + 1..=self.candidates.len()).find(|&k| self.mask(k) & self.used[i] == 0);
                if let Some(k) = next {
                    self.choice[i] = k;
                    let after = self.used[i] | self.mask(k);
                    for j in i + 1..n {
                        self.choice[j] = 0;
                        self.used[j] = after;
                    }
                    break;
                }
            }
        }
        Some(self.choice.iter().map(|&k| self.mask(k)).collect())
    }
}

impl Iterator for CompactAllocations {
    type Item = Allocation;

    fn next(&mut self) -> Option<Allocation> {
        self.step().map(|masks| masks_to_allocation(&masks))
    }
}

fn masks_to_allocation(masks: &[u64]) -> Allocation {
    Allocation::from_bundles(
        masks
            .iter()
            .map(|&m| (0..64).filter(|&z| m >> z & 1 == 1).collect::<BTreeSet<usize>>())
            .collect(),
    )
}

/// Every compact allocation exactly once.
pub fn enumerate_compact_allocations(
    instance: &Instance,
    spec: &CompactnessSpec,
    budget: &EnumBudget,
) -> Result<CompactAllocations> {
    let candidates = compact_bundles(instance, spec, budget)?;
    Ok(CompactAllocations::new(candidates, instance.agent_count()))
}

/// One pass over all compact allocations with their value matrices
/// `vals[p][q] = v_p(π(q))`; stops early when `visit` returns true.
fn sweep(
    instance: &Instance,
    candidates: &[u64],
    budget: &EnumBudget,
    mut visit: impl FnMut(&[u64], &[Vec<u64>], bool) -> bool,
) -> Result<()> {
    let n = instance.agent_count();
    let m = instance.item_count();
    let cand_vals: Vec<Vec<u64>> = candidates
        .iter()
        .map(|&mask| (0..n).map(|p| (0..m).filter(|&z| mask >> z & 1 == 1).map(|z| instance.value(p, z)).sum()).collect())
        .collect();
    let mut it = CompactAllocations::new(candidates.to_vec(), n);
    let mut count = 0u64;
    let mut vals = vec![vec![0u64; n]; n];
    while it.step().is_some() {
        count += 1;
        if count > budget.max_allocations {
            return Err(Error::BudgetExceeded(format!("more than {} compact allocations", budget.max_allocations)));
        }
        let mut covered = 0usize;
        for q in 0..n {
            let k = it.choice[q];
            for p in 0..n {
                vals[p][q] = if k == 0 { 0 } else { cand_vals[k - 1][p] };
            }
            covered += if k == 0 { 0 } else { candidates[k - 1].count_ones() as usize };
        }
        let masks: Vec<u64> = it.choice.iter().map(|&k| it.mask(k)).collect();
        if visit(&masks, &vals, covered == m) {
            break;
        }
    }
    Ok(())
}

fn first(
    instance: &Instance,
    candidates: &[u64],
    budget: &EnumBudget,
    accept: impl Fn(&[Vec<u64>], bool) -> bool,
) -> Result<Option<Allocation>> {
    let mut found = None;
    sweep(instance, candidates, budget, |masks, vals, complete| {
        if accept(vals, complete) {
            found = Some(masks_to_allocation(masks));
            true
        } else {
            false
        }
    })?;
    Ok(found)
}

/// First compact allocation (in enumeration order) meeting `goal`.
/// Pareto-optimality is judged among compact allocations.
pub fn solve_enum(
    instance: &Instance,
    spec: &CompactnessSpec,
    goal: FairnessGoal,
    budget: &EnumBudget,
) -> Result<Option<Allocation>> {
    let n = instance.agent_count();
    let candidates = compact_bundles(instance, spec, budget)?;
    let envy_free = |vals: &[Vec<u64>]| (0..n).all(|i| vals[i].iter().all(|&x| x <= vals[i][i]));
    match goal {
        FairnessGoal::Proportional => first(instance, &candidates, budget, |vals, _| {
            (0..n).all(|i| n as u64 * vals[i][i] >= instance.total(i))
        }),
        FairnessGoal::EnvyFreeComplete => {
            first(instance, &candidates, budget, |vals, complete| complete && envy_free(vals))
        }
        FairnessGoal::EnvyFreeParetoOptimal => {
            let mut frontier: Vec<Vec<u64>> = Vec::new();
            sweep(instance, &candidates, budget, |_, vals, _| {
                let d: Vec<u64> = (0..n).map(|i| vals[i][i]).collect();
                if !frontier.iter().any(|f| f == &d || dominates(f, &d)) {
                    frontier.retain(|f| !dominates(&d, f));
                    frontier.push(d);
                }
                false
            })?;
            first(instance, &candidates, budget, |vals, _| {
                let d: Vec<u64> = (0..n).map(|i| vals[i][i]).collect();
                envy_free(vals) && !frontier.iter().any(|f| dominates(f, &d))
            })
        }
        FairnessGoal::Maximin => {
            let shares = shares_from(instance, &candidates, budget)?;
            first(instance, &candidates, budget, |vals, _| (0..n).all(|i| vals[i][i] >= shares[i]))
        }
        FairnessGoal::MaxWelfare => {
            let target = max_unconstrained_welfare(instance);
            first(instance, &candidates, budget, |vals, _| (0..n).map(|i| vals[i][i]).sum::<u64>() == target)
        }
    }
}

fn shares_from(instance: &Instance, candidates: &[u64], budget: &EnumBudget) -> Result<Vec<u64>> {
    let n = instance.agent_count();
    let mut best = vec![0u64; n];
    sweep(instance, candidates, budget, |_, vals, _| {
        for p in 0..n {
            best[p] = best[p].max(vals[p].iter().copied().min().unwrap_or(0));
        }
        false
    })?;
    Ok(best)
}

/// Maximin shares of all agents by a full enumeration pass.
pub fn mms_all_enum(instance: &Instance, spec: &CompactnessSpec, budget: &EnumBudget) -> Result<Vec<u64>> {
    let candidates = compact_bundles(instance, spec, budget)?;
    shares_from(instance, &candidates, budget)
}

pub fn mms_enum(instance: &Instance, spec: &CompactnessSpec, agent: usize, budget: &EnumBudget) -> Result<u64> {
    if agent >= instance.agent_count() {
        return Err(Error::AgentOutOfRange { agent, len: instance.agent_count() });
    }
    Ok(mms_all_enum(instance, spec, budget)?[agent])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;

    #[test]
    fn empty_graph_has_only_the_empty_allocation() {
        let inst = Instance::new(Graph::empty(0), vec![vec![], vec![]]).unwrap();
        let all: Vec<_> = enumerate_compact_allocations(&inst, &CompactnessSpec::compact(1, 1), &EnumBudget::default())
            .unwrap()
            .collect();
        assert_eq!(all, vec![Allocation::empty(2)]);
    }

    #[test]
    fn radius_zero_bundles_are_single_items() {
        let inst = Instance::new(Graph::cycle(4), vec![vec![1; 4]; 2]).unwrap();
        let all: Vec<_> = enumerate_compact_allocations(&inst, &CompactnessSpec::compact(1, 0), &EnumBudget::default())
            .unwrap()
            .collect();
        assert!(all.iter().all(|a| a.bundles().iter().all(|b| b.len() <= 1)));
        // 1 + 4 + 4 + 12 tuples: both empty, one agent holds one of 4 items, or both hold distinct items.
        assert_eq!(all.len(), 1 + 4 + 4 + 12);
    }

    #[test]
    fn star_goes_to_single_agent() {
        let inst = Instance::new(Graph::star(3), vec![vec![1, 2, 3, 4]]).unwrap();
        let a = solve_enum(&inst, &CompactnessSpec::compact(1, 1), FairnessGoal::Proportional, &EnumBudget::default())
            .unwrap()
            .unwrap();
        assert_eq!(a.to_vecs(), vec![vec![0, 1, 2, 3]]);
    }

    #[test]
    fn strong_candidates_exclude_stars() {
        let inst = Instance::new(Graph::star(3), vec![vec![1; 4]]).unwrap();
        let cands = compact_bundles(&inst, &CompactnessSpec::strong(1, 1), &EnumBudget::default()).unwrap();
        assert!(!cands.contains(&0b1111));
        assert!(cands.contains(&0b0011));
        assert!(!cands.contains(&0b0110));
    }
}
