//! Exhaustive ground truth. Every assignment of items to agents (or to no
//! one) is visited in a fixed mixed-radix order; nothing is pruned.
//! [`solve_oracle_pruned`] is the one exception, kept apart and checked
//! against the plain scan.

use std::collections::BTreeSet;
use std::ops::ControlFlow;

use crate::compactness::is_compact_bundle;
use crate::error::{Error, Result};
use crate::fairness::{dominates, max_unconstrained_welfare};
use crate::model::{Allocation, CompactnessSpec, FairnessGoal, Instance};

/// Largest item count the oracle accepts regardless of budget; bundles are
/// stored as machine-word bitmasks and bundle shapes are tabulated per subset.
pub const MAX_ORACLE_ITEMS: usize = 26;

/// Cap on the number of assignments `(n+1)^m` the oracle may visit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OracleBudget {
    pub max_allocations: u64,
    /// When false an oversized instance is scanned anyway.
    pub abort_on_exceed: bool,
}

impl Default for OracleBudget {
    /// `4^8`: eight items and three agents.
    fn default() -> Self {
        OracleBudget { max_allocations: 65_536, abort_on_exceed: true }
    }
}

impl OracleBudget {
    pub fn new(max_allocations: u64) -> Self {
        OracleBudget { max_allocations: max_allocations.max(1), abort_on_exceed: true }
    }

    pub fn unlimited() -> Self {
        OracleBudget { max_allocations: u64::MAX, abort_on_exceed: false }
    }

    fn check(&self, instance: &Instance) -> Result<()> {
        let m = instance.item_count();
        if m > MAX_ORACLE_ITEMS {
            return Err(Error::BudgetExceeded(format!(
                "the oracle handles at most {MAX_ORACLE_ITEMS} items, got {m}"
            )));
        }
        let count = assignment_count(instance);
        if self.abort_on_exceed && count > self.max_allocations {
            return Err(Error::BudgetExceeded(format!(
                "{count} assignments exceed the oracle budget of {}",
                self.max_allocations
            )));
        }
        Ok(())
    }
}

/// `(n+1)^m`, saturating.
pub fn assignment_count(instance: &Instance) -> u64 {
    let base = instance.agent_count() as u64 + 1;
    (0..instance.item_count()).fold(1u64, |acc, _| acc.saturating_mul(base))
}

/// Which bundles count as admissible.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BundleShape {
    Any,
    Compact(CompactnessSpec),
    /// Bundle induces a connected subgraph (the empty bundle included).
    Connected,
}

/// Iterator over all `(n+1)^m` allocations. Item 0 is the fastest-changing
/// digit; digit 0 means unallocated and digit `d > 0` means agent `d - 1`.
pub struct Allocations {
    n: usize,
    digits: Vec<usize>,
    done: bool,
}

impl Iterator for Allocations {
    type Item = Allocation;

    fn next(&mut self) -> Option<Allocation> {
        if self.done {
            return None;
        }
        let mut bundles = vec![BTreeSet::new(); self.n];
        for (z, &d) in self.digits.iter().enumerate() {
            if d > 0 {
                bundles[d - 1].insert(z);
            }
        }
        self.done = true;
        for d in self.digits.iter_mut() {
            if *d < self.n {
                *d += 1;
                self.done = false;
                break;
            }
            *d = 0;
        }
        Some(Allocation::from_bundles(bundles))
    }
}

pub fn enumerate_allocations(instance: &Instance, budget: &OracleBudget) -> Result<Allocations> {
    budget.check(instance)?;
    Ok(Allocations { n: instance.agent_count(), digits: vec![0; instance.item_count()], done: false })
}

/// Lazily filled table of which item subsets are admissible bundles.
struct ShapeTable<'a> {
    instance: &'a Instance,
    shape: BundleShape,
    /// 0 = unknown, 1 = admissible, 2 = not admissible.
    memo: Vec<u8>,
}

impl<'a> ShapeTable<'a> {
    fn new(instance: &'a Instance, shape: BundleShape) -> Self {
        let size = match shape {
            BundleShape::Any => 0,
            _ => 1usize << instance.item_count(),
        };
        ShapeTable { instance, shape, memo: vec![0; size] }
    }

    fn admits(&mut self, mask: u64) -> bool {
        let spec = match self.shape {
            BundleShape::Any => return true,
            BundleShape::Compact(spec) => Some(spec),
            BundleShape::Connected => None,
        };
        let slot = &mut self.memo[mask as usize];
        if *slot == 0 {
            let items = mask_items(mask);
            let ok = match spec {
                Some(spec) => is_compact_bundle(self.instance.graph(), &items, &spec),
                None => self.instance.graph().induced(&items).graph.components().len() <= 1,
            };
            *slot = if ok { 1 } else { 2 };
        }
        *slot == 1
    }
}

fn mask_items(mask: u64) -> Vec<usize> {
    (0..64).filter(|&z| mask >> z & 1 == 1).collect()
}

/// Running state of the exhaustive scan: per-agent bundle masks and the
/// matrix `vals[p * n + q] = v_p(π(q))`, updated one digit at a time.
struct Scan<'a> {
    instance: &'a Instance,
    n: usize,
    digits: Vec<usize>,
    masks: Vec<u64>,
    vals: Vec<u64>,
    unallocated: usize,
}

impl<'a> Scan<'a> {
    fn new(instance: &'a Instance) -> Self {
        let n = instance.agent_count();
        let m = instance.item_count();
        Scan { instance, n, digits: vec![0; m], masks: vec![0; n], vals: vec![0; n * n], unallocated: m }
    }

    fn set(&mut self, z: usize, from: usize, to: usize) {
        if from > 0 {
            let q = from - 1;
            self.masks[q] &= !(1u64 << z);
            for p in 0..self.n {
                self.vals[p * self.n + q] -= self.instance.value(p, z);
            }
            self.unallocated += 1;
        }
        if to > 0 {
            let q = to - 1;
            self.masks[q] |= 1u64 << z;
            for p in 0..self.n {
                self.vals[p * self.n + q] += self.instance.value(p, z);
            }
            self.unallocated -= 1;
        }
        self.digits[z] = to;
    }

    /// Moves to the next assignment; false after the last one.
    fn advance(&mut self) -> bool {
        for z in 0..self.digits.len() {
            let d = self.digits[z];
            if d < self.n {
                self.set(z, d, d + 1);
                return true;
            }
            self.set(z, d, 0);
        }
        false
    }

    fn own(&self, i: usize) -> u64 {
        self.vals[i * self.n + i]
    }

    fn diagonal(&self) -> Vec<u64> {
        (0..self.n).map(|i| self.own(i)).collect()
    }

    fn allocation(&self) -> Allocation {
        Allocation::from_bundles(self.masks.iter().map(|&m| mask_items(m).into_iter().collect()).collect())
    }
}

/// Calls `visit` on every allocation whose bundles all have the given shape.
fn scan(
    instance: &Instance,
    shape: BundleShape,
    budget: &OracleBudget,
    mut visit: impl FnMut(&Scan) -> ControlFlow<()>,
) -> Result<()> {
    budget.check(instance)?;
    let mut table = ShapeTable::new(instance, shape);
    let mut state = Scan::new(instance);
    loop {
        if state.masks.iter().all(|&m| table.admits(m)) && visit(&state).is_break() {
            return Ok(());
        }
        if !state.advance() {
            return Ok(());
        }
    }
}

fn first_match(
    instance: &Instance,
    shape: BundleShape,
    budget: &OracleBudget,
    mut accept: impl FnMut(&Scan) -> bool,
) -> Result<Option<Allocation>> {
    let mut found = None;
    scan(instance, shape, budget, |s| {
        if accept(s) {
            found = Some(s.allocation());
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    })?;
    Ok(found)
}

/// All allocations of the given shape, in scan order.
pub fn admissible_allocations(instance: &Instance, shape: BundleShape, budget: &OracleBudget) -> Result<Vec<Allocation>> {
    let mut out = Vec::new();
    scan(instance, shape, budget, |s| {
        out.push(s.allocation());
        ControlFlow::Continue(())
    })?;
    Ok(out)
}

/// First allocation in scan order that is compact per `spec` and meets `goal`.
pub fn solve_oracle(
    instance: &Instance,
    spec: &CompactnessSpec,
    goal: FairnessGoal,
    budget: &OracleBudget,
) -> Result<Option<Allocation>> {
    solve_oracle_shape(instance, BundleShape::Compact(*spec), goal, budget)
}

/// As [`solve_oracle`] for an arbitrary bundle shape. Pareto-optimality is
/// judged among allocations of the same shape.
pub fn solve_oracle_shape(
    instance: &Instance,
    shape: BundleShape,
    goal: FairnessGoal,
    budget: &OracleBudget,
) -> Result<Option<Allocation>> {
    let n = instance.agent_count();
    let totals: Vec<u64> = (0..n).map(|i| instance.total(i)).collect();
    let envy_free = |s: &Scan| (0..n).all(|i| (0..n).all(|j| s.vals[i * n + j] <= s.own(i)));
    match goal {
        FairnessGoal::Proportional => {
            first_match(instance, shape, budget, |s| (0..n).all(|i| n as u64 * s.own(i) >= totals[i]))
        }
        FairnessGoal::EnvyFreeComplete => first_match(instance, shape, budget, |s| s.unallocated == 0 && envy_free(s)),
        FairnessGoal::EnvyFreeParetoOptimal => {
            let frontier = pareto_frontier(instance, shape, budget)?;
            first_match(instance, shape, budget, |s| {
                envy_free(s) && {
                    let d = s.diagonal();
                    !frontier.iter().any(|f| dominates(f, &d))
                }
            })
        }
        FairnessGoal::Maximin => {
            let shares = mms_all_shape(instance, shape, budget)?;
            first_match(instance, shape, budget, |s| (0..n).all(|i| s.own(i) >= shares[i]))
        }
        FairnessGoal::MaxWelfare => {
            let target = max_unconstrained_welfare(instance);
            first_match(instance, shape, budget, |s| (0..n).map(|i| s.own(i)).sum::<u64>() == target)
        }
    }
}

/// As [`solve_oracle`], but for proportionality a branch of the scan is
/// dropped once some agent cannot reach its share even with every undecided
/// item. Same answer, same witness; other goals fall back to the plain scan.
pub fn solve_oracle_pruned(
    instance: &Instance,
    spec: &CompactnessSpec,
    goal: FairnessGoal,
    budget: &OracleBudget,
) -> Result<Option<Allocation>> {
    let shape = BundleShape::Compact(*spec);
    match goal {
        FairnessGoal::Proportional => {
            let n = instance.agent_count().max(1) as u64;
            let quotas: Vec<u64> =
                (0..instance.agent_count()).map(|i| instance.total(i).div_ceil(n)).collect();
            first_meeting_quotas(instance, shape, budget, &quotas)
        }
        _ => solve_oracle_shape(instance, shape, goal, budget),
    }
}

/// First allocation in scan order of the given shape with
/// `v_i(π(i)) >= quotas[i]` for every agent. Items are decided from the
/// most significant scan digit down, so the result matches [`first_match`].
fn first_meeting_quotas(
    instance: &Instance,
    shape: BundleShape,
    budget: &OracleBudget,
    quotas: &[u64],
) -> Result<Option<Allocation>> {
    budget.check(instance)?;
    let n = instance.agent_count();
    let m = instance.item_count();
    // prefix[z][i]: agent i's value for items 0..z, all still undecided
    // while item z is being placed.
    let mut prefix = vec![vec![0u64; n]; m + 1];
    for z in 0..m {
        for i in 0..n {
            prefix[z + 1][i] = prefix[z][i] + instance.value(i, z);
        }
    }
    let mut search = QuotaSearch {
        instance,
        table: ShapeTable::new(instance, shape),
        quotas,
        prefix,
        own: vec![0; n],
        masks: vec![0; n],
    };
    Ok(search.place(m).then(|| {
        Allocation::from_bundles(search.masks.iter().map(|&b| mask_items(b).into_iter().collect()).collect())
    }))
}

struct QuotaSearch<'a> {
    instance: &'a Instance,
    table: ShapeTable<'a>,
    quotas: &'a [u64],
    prefix: Vec<Vec<u64>>,
    own: Vec<u64>,
    masks: Vec<u64>,
}

impl QuotaSearch<'_> {
    /// Items `0..z` are undecided. True once a full assignment succeeds,
    /// leaving it in `masks`.
    fn place(&mut self, z: usize) -> bool {
        let reachable = (0..self.own.len()).all(|i| self.own[i] + self.prefix[z][i] >= self.quotas[i]);
        if !reachable {
            return false;
        }
        if z == 0 {
            let masks = self.masks.clone();
            return masks.iter().all(|&b| self.table.admits(b));
        }
        let item = z - 1;
        if self.place(item) {
            return true;
        }
        for q in 0..self.own.len() {
            let v = self.instance.value(q, item);
            self.own[q] += v;
            self.masks[q] |= 1 << item;
            if self.place(item) {
                return true;
            }
            self.own[q] -= v;
            self.masks[q] &= !(1 << item);
        }
        false
    }
}

/// Maximal utility vectors `(v_i(π(i)))_i` over allocations of the shape.
fn pareto_frontier(instance: &Instance, shape: BundleShape, budget: &OracleBudget) -> Result<Vec<Vec<u64>>> {
    let mut frontier: Vec<Vec<u64>> = Vec::new();
    scan(instance, shape, budget, |s| {
        let d = s.diagonal();
        if !frontier.iter().any(|f| f == &d || dominates(f, &d)) {
            frontier.retain(|f| !dominates(&d, f));
            frontier.push(d);
        }
        ControlFlow::Continue(())
    })?;
    Ok(frontier)
}

/// Maximin share of `agent` among compact allocations:
/// `max_π min_j v_agent(π(j))`.
pub fn mms_oracle(instance: &Instance, spec: &CompactnessSpec, agent: usize, budget: &OracleBudget) -> Result<u64> {
    if agent >= instance.agent_count() {
        return Err(Error::AgentOutOfRange { agent, len: instance.agent_count() });
    }
    Ok(mms_all_shape(instance, BundleShape::Compact(*spec), budget)?[agent])
}

/// Maximin shares of all agents in one scan.
pub fn mms_all_oracle(instance: &Instance, spec: &CompactnessSpec, budget: &OracleBudget) -> Result<Vec<u64>> {
    mms_all_shape(instance, BundleShape::Compact(*spec), budget)
}

pub fn mms_all_shape(instance: &Instance, shape: BundleShape, budget: &OracleBudget) -> Result<Vec<u64>> {
    let n = instance.agent_count();
    let mut best = vec![0u64; n];
    scan(instance, shape, budget, |s| {
        for (p, b) in best.iter_mut().enumerate() {
            let worst = s.vals[p * n..(p + 1) * n].iter().copied().min().unwrap_or(0);
            *b = (*b).max(worst);
        }
        ControlFlow::Continue(())
    })?;
    Ok(best)
}

/// Largest utilitarian welfare of a compact allocation.
pub fn max_compact_welfare(instance: &Instance, spec: &CompactnessSpec, budget: &OracleBudget) -> Result<u64> {
    let n = instance.agent_count();
    let mut best = 0;
    scan(instance, BundleShape::Compact(*spec), budget, |s| {
        best = best.max((0..n).map(|i| s.own(i)).sum());
        ControlFlow::Continue(())
    })?;
    Ok(best)
}

/// No allocation at all (of any shape) makes every agent weakly better off
/// and someone strictly better off.
pub fn is_pareto_optimal(instance: &Instance, allocation: &Allocation, budget: &OracleBudget) -> Result<bool> {
    pareto_optimal_among(instance, allocation, BundleShape::Any, budget)
}

/// Pareto-optimality judged only against compact allocations.
pub fn is_pareto_optimal_within(
    instance: &Instance,
    allocation: &Allocation,
    spec: &CompactnessSpec,
    budget: &OracleBudget,
) -> Result<bool> {
    pareto_optimal_among(instance, allocation, BundleShape::Compact(*spec), budget)
}

fn pareto_optimal_among(
    instance: &Instance,
    allocation: &Allocation,
    shape: BundleShape,
    budget: &OracleBudget,
) -> Result<bool> {
    let own: Vec<u64> = (0..instance.agent_count())
        .map(|i| instance.bundle_value(i, allocation.bundle(i)))
        .collect();
    let mut optimal = true;
    scan(instance, shape, budget, |s| {
        if dominates(&s.diagonal(), &own) {
            optimal = false;
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    })?;
    Ok(optimal)
}
