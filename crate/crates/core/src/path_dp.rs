//! Proportional allocations on a path whose bundles have one center (blocks of
//! at most `2β+1` consecutive items, or `β+1` in the strong variant).
//!
//! Two table layouts are provided: one indexed by subsets of agents and one
//! indexed by how many agents of each valuation type are still unserved.
//! Both only query values of contiguous blocks, so valuations need not be
//! additive.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::model::{Allocation, Instance};

/// Values of contiguous blocks of a path.
pub trait BlockValuation {
    fn agent_count(&self) -> usize;

    /// Number of items on the path.
    fn item_count(&self) -> usize;

    /// Value of the items at path positions `start..end` (empty if equal).
    fn block_value(&self, agent: usize, start: usize, end: usize) -> u64;

    fn total_value(&self, agent: usize) -> u64 {
        self.block_value(agent, 0, self.item_count())
    }
}

/// Additive valuations along a path, answered with prefix sums.
pub struct AdditivePath {
    prefix: Vec<Vec<u64>>,
}

impl AdditivePath {
    pub fn new(instance: &Instance, order: &[usize]) -> Self {
        let prefix = (0..instance.agent_count())
            .map(|a| {
                let mut acc = vec![0u64];
                for &z in order {
                    acc.push(acc.last().unwrap() + instance.value(a, z));
                }
                acc
            })
            .collect();
        AdditivePath { prefix }
    }
}

impl BlockValuation for AdditivePath {
    fn agent_count(&self) -> usize {
        self.prefix.len()
    }

    fn item_count(&self) -> usize {
        self.prefix[0].len() - 1
    }

    fn block_value(&self, agent: usize, start: usize, end: usize) -> u64 {
        self.prefix[agent][end] - self.prefix[agent][start]
    }
}

/// Block valuation given by a closure.
pub struct FnValuation<F> {
    agents: usize,
    items: usize,
    value: F,
}

impl<F: Fn(usize, usize, usize) -> u64> FnValuation<F> {
    pub fn new(agents: usize, items: usize, value: F) -> Self {
        FnValuation { agents, items, value }
    }
}

impl<F: Fn(usize, usize, usize) -> u64> BlockValuation for FnValuation<F> {
    fn agent_count(&self) -> usize {
        self.agents
    }

    fn item_count(&self) -> usize {
        self.items
    }

    fn block_value(&self, agent: usize, start: usize, end: usize) -> u64 {
        (self.value)(agent, start, end)
    }
}

/// Partition of agents into types with identical valuations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AgentTypeProfile {
    type_of: Vec<usize>,
    counts: Vec<usize>,
}

impl AgentTypeProfile {
    /// `type_of[a]` is the type of agent `a`; types must be numbered `0..p`
    /// without gaps.
    pub fn new(type_of: Vec<usize>) -> Result<Self> {
        let p = type_of.iter().map(|&t| t + 1).max().unwrap_or(0);
        let mut counts = vec![0; p];
        for &t in &type_of {
            counts[t] += 1;
        }
        if counts.contains(&0) {
            return Err(Error::InvalidInstance("agent types must be numbered without gaps".into()));
        }
        Ok(AgentTypeProfile { type_of, counts })
    }

    pub fn type_count(&self) -> usize {
        self.counts.len()
    }

    pub fn type_of(&self, agent: usize) -> usize {
        self.type_of[agent]
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    fn representative(&self, t: usize) -> usize {
        self.type_of.iter().position(|&x| x == t).expect("type has an agent")
    }
}

/// A path instance: `order[k]` is the vertex at path position `k`.
pub struct PathInstance<'a> {
    order: Vec<usize>,
    valuation: Box<dyn BlockValuation + 'a>,
    types: AgentTypeProfile,
}

impl<'a> PathInstance<'a> {
    /// Additive path instance; agents with identical rows share a type.
    pub fn from_instance(instance: &Instance) -> Result<PathInstance<'static>> {
        let order = instance.graph().path_order().ok_or(Error::NotAPath)?;
        let valuation = AdditivePath::new(instance, &order);
        let types = AgentTypeProfile::new(instance.agent_types())?;
        Ok(PathInstance { order, valuation: Box::new(valuation), types })
    }

    /// Path instance with an arbitrary block valuation. Agents declared to
    /// share a type must agree on every block.
    pub fn with_valuation(
        order: Vec<usize>,
        valuation: impl BlockValuation + 'a,
        types: Option<AgentTypeProfile>,
    ) -> Result<Self> {
        let n = valuation.agent_count();
        if n == 0 {
            return Err(Error::InvalidInstance("at least one agent is required".into()));
        }
        if order.len() != valuation.item_count() {
            return Err(Error::InvalidInstance("path order and valuation disagree on the item count".into()));
        }
        let types = match types {
            Some(t) => t,
            None => AgentTypeProfile::new((0..n).collect())?,
        };
        if types.type_of.len() != n {
            return Err(Error::InvalidInstance("type profile must cover every agent".into()));
        }
        let m = order.len();
        for a in 0..n {
            let rep = types.representative(types.type_of(a));
            for s in 0..=m {
                for e in s..=m {
                    if valuation.block_value(a, s, e) != valuation.block_value(rep, s, e) {
                        return Err(Error::InvalidInstance(format!(
                            "agents {a} and {rep} share a type but value a block differently"
                        )));
                    }
                }
            }
        }
        Ok(PathInstance { order, valuation: Box::new(valuation), types })
    }

    pub fn item_count(&self) -> usize {
        self.order.len()
    }

    pub fn agent_count(&self) -> usize {
        self.valuation.agent_count()
    }

    pub fn types(&self) -> &AgentTypeProfile {
        &self.types
    }

    /// Whether agent `a` is proportional with the block `start..end`.
    fn accepts(&self, a: usize, start: usize, end: usize) -> bool {
        let n = self.agent_count() as u128;
        n * self.valuation.block_value(a, start, end) as u128 >= self.valuation.total_value(a) as u128
    }

    fn to_allocation(&self, blocks: &[(usize, usize, usize)]) -> Allocation {
        let mut bundles = vec![BTreeSet::new(); self.agent_count()];
        for &(a, s, e) in blocks {
            bundles[a].extend(self.order[s..e].iter().copied());
        }
        Allocation::from_bundles(bundles)
    }
}

fn max_block_len(beta: usize, strong: bool) -> usize {
    if strong {
        beta + 1
    } else {
        2 * beta + 1
    }
}

/// Outcome of a path DP: an allocation if one exists and the number of table
/// cells that were allocated.
#[derive(Clone, Debug)]
pub struct PathDpReport {
    pub allocation: Option<Allocation>,
    pub table_entries: usize,
}

/// How a true cell was reached: the last block `start..end` goes to `owner`
/// (an agent or a type), the rest comes from cell `(end, start, rest)`.
#[derive(Clone, Copy, Debug)]
enum Back {
    Empty,
    Block { start: u32, end: u32, owner: u32 },
}

/// Table over `1 ≤ j ≤ i ≤ m` and a key from `0..keys`; cell `(i, j, key)`
/// says whether the agents described by `key` can be served by disjoint
/// blocks inside positions `0..j`.
struct Table {
    keys: usize,
    cells: Vec<Option<Back>>,
}

impl Table {
    fn new(m: usize, keys: usize) -> Self {
        Table { keys, cells: vec![None; m * (m + 1) / 2 * keys] }
    }

    fn index(&self, i: usize, j: usize, key: usize) -> usize {
        ((i - 1) * i / 2 + (j - 1)) * self.keys + key
    }
}

/// Cells with `i = 0` or `j = 0` are not stored: only empty blocks fit there.
fn lookup(table: &Table, i: usize, j: usize, key: usize, empty_ok: impl Fn(usize) -> bool) -> bool {
    if i == 0 || j == 0 {
        empty_ok(key)
    } else {
        table.cells[table.index(i, j, key)].is_some()
    }
}

/// Fills the generic table. `owners(key)` lists `(owner, smaller key)` pairs:
/// the owners still to serve under `key` and the key left once one is served.
fn fill(
    path: &PathInstance,
    beta: usize,
    strong: bool,
    keys: usize,
    owner_accepts: &dyn Fn(usize, usize, usize) -> bool,
    owners: &dyn Fn(usize) -> Vec<(usize, usize)>,
    empty_ok: &dyn Fn(usize) -> bool,
) -> Table {
    let m = path.item_count();
    let limit = max_block_len(beta, strong);
    let mut table = Table::new(m, keys);
    for i in 1..=m {
        for j in 1..=i {
            for key in 0..keys {
                let idx = table.index(i, j, key);
                if key == 0 {
                    table.cells[idx] = Some(Back::Empty);
                    continue;
                }
                'search: for end in 0..=j {
                    for start in end.saturating_sub(limit)..=end {
                        for &(owner, rest) in &owners(key) {
                            if owner_accepts(owner, start, end) && lookup(&table, end, start, rest, empty_ok) {
                                table.cells[idx] =
                                    Some(Back::Block { start: start as u32, end: end as u32, owner: owner as u32 });
                                break 'search;
                            }
                        }
                    }
                }
            }
        }
    }
    table
}

/// Follows backpointers from a satisfied top cell. Owners left when reaching
/// the unstored border receive empty blocks.
fn trace(
    table: &Table,
    mut i: usize,
    mut j: usize,
    mut key: usize,
    owners: &dyn Fn(usize) -> Vec<(usize, usize)>,
) -> Vec<(usize, usize, usize)> {
    let mut blocks = Vec::new();
    loop {
        if i == 0 || j == 0 {
            while key != 0 {
                let (owner, rest) = owners(key)[0];
                blocks.push((owner, 0, 0));
                key = rest;
            }
            return blocks;
        }
        match table.cells[table.index(i, j, key)].expect("traced cells are true") {
            Back::Empty => return blocks,
            Back::Block { start, end, owner } => {
                let rest = owners(key).into_iter().find(|&(o, _)| o == owner as usize).unwrap().1;
                blocks.push((owner as usize, start as usize, end as usize));
                i = end as usize;
                j = start as usize;
                key = rest;
            }
        }
    }
}

fn answer(
    table: &Table,
    m: usize,
    full: usize,
    owners: &dyn Fn(usize) -> Vec<(usize, usize)>,
    empty_ok: &dyn Fn(usize) -> bool,
) -> Option<Vec<(usize, usize, usize)>> {
    if m == 0 {
        return empty_ok(full).then(|| trace(table, 0, 0, full, owners));
    }
    (1..=m)
        .find(|&j| table.cells[table.index(m, j, full)].is_some())
        .map(|j| trace(table, m, j, full, owners))
}

/// Table indexed by the set of agents still to serve.
pub fn agents_dp(path: &PathInstance, beta: usize, strong: bool) -> PathDpReport {
    let n = path.agent_count();
    let keys = 1usize << n;
    let owners = |key: usize| -> Vec<(usize, usize)> {
        (0..n).filter(|a| key >> a & 1 == 1).map(|a| (a, key & !(1 << a))).collect()
    };
    let accepts = |a: usize, s: usize, e: usize| path.accepts(a, s, e);
    let empty_ok = |key: usize| (0..n).filter(|a| key >> a & 1 == 1).all(|a| path.accepts(a, 0, 0));
    let table = fill(path, beta, strong, keys, &accepts, &owners, &empty_ok);
    let blocks = answer(&table, path.item_count(), keys - 1, &owners, &empty_ok);
    PathDpReport {
        allocation: blocks.map(|b| path.to_allocation(&b)),
        table_entries: table.cells.len(),
    }
}

/// Table indexed by the number of agents of each type still to serve.
pub fn types_dp(path: &PathInstance, beta: usize, strong: bool) -> PathDpReport {
    let counts = path.types.counts().to_vec();
    let p = counts.len();
    let mut radix = vec![1usize; p + 1];
    for q in 0..p {
        radix[q + 1] = radix[q] * (counts[q] + 1);
    }
    let keys = radix[p];
    let digit = |key: usize, q: usize| key / radix[q] % (counts[q] + 1);
    let owners = |key: usize| -> Vec<(usize, usize)> {
        (0..p).filter(|&q| digit(key, q) > 0).map(|q| (q, key - radix[q])).collect()
    };
    let reps: Vec<usize> = (0..p).map(|q| path.types.representative(q)).collect();
    let accepts = |q: usize, s: usize, e: usize| path.accepts(reps[q], s, e);
    let empty_ok = |key: usize| (0..p).filter(|&q| digit(key, q) > 0).all(|q| path.accepts(reps[q], 0, 0));
    let table = fill(path, beta, strong, keys, &accepts, &owners, &empty_ok);
    let blocks = answer(&table, path.item_count(), keys - 1, &owners, &empty_ok).map(|blocks| {
        let mut pools: Vec<Vec<usize>> =
            (0..p).map(|q| (0..path.agent_count()).filter(|&a| path.types.type_of(a) == q).collect()).collect();
        blocks
            .into_iter()
            .map(|(q, s, e)| (pools[q].pop().expect("one block per agent of the type"), s, e))
            .collect::<Vec<_>>()
    });
    PathDpReport {
        allocation: blocks.map(|b| path.to_allocation(&b)),
        table_entries: table.cells.len(),
    }
}

pub fn solve_prop_path_agents(path: &PathInstance, beta: usize, strong: bool) -> Option<Allocation> {
    agents_dp(path, beta, strong).allocation
}

pub fn solve_prop_path_types(path: &PathInstance, beta: usize, strong: bool) -> Option<Allocation> {
    types_dp(path, beta, strong).allocation
}
