//! Bottom-up dynamic program over a nice tree decomposition of an annotated
//! instance.
//!
//! A state records, for every vertex of the current bag, its owner, its
//! distance to the owner's hub inside the bundle, and its block
//! in a rooted partition. Blocks are the pieces of the bundle's shortest-path
//! forest seen so far; a non-root vertex already has its parent (a neighbour
//! one step closer to the hub). Labels are exact distances: every vertex but
//! a hub has a parent one step closer, and no edge inside a bundle joins
//! labels more than one apart. Alongside, the state carries the tracked
//! entries of the value matrix `w[p][q] = v_p(π(q) ∩ V_t)` for the vertices
//! introduced below the node, grouped into slots that each hold a sum of
//! such entries, optionally saturated at a cap.

use std::collections::BTreeSet;

use indexmap::IndexMap;
use rustc_hash::FxBuildHasher;

use crate::annotate::AnnotatedInstance;
use crate::error::{Error, Result};
use crate::graph::Distance;
use crate::model::Allocation;
use crate::treewidth::{NiceKind, NiceTreeDecomposition};
use crate::tw_dp::partition::Forest;

// Cell layout: bits 0..8 owner (0 = unallocated, else agent + 1),
// 8..16 distance, 16..24 block label, bit 24 root flag.
const ROOT: u32 = 1 << 24;

fn cell(owner: usize, dist: usize, block: usize, root: bool) -> u32 {
    owner as u32 | (dist as u32) << 8 | (block as u32) << 16 | if root { ROOT } else { 0 }
}

fn owner(c: u32) -> usize {
    (c & 0xff) as usize
}

fn dist(c: u32) -> usize {
    (c >> 8 & 0xff) as usize
}

fn block(c: u32) -> usize {
    (c >> 16 & 0xff) as usize
}

fn is_root(c: u32) -> bool {
    c & ROOT != 0
}

fn with_block(c: u32, b: usize) -> u32 {
    c & !(0xff << 16) | (b as u32) << 16
}

/// Cell without its block label and root flag; states can only be joined
/// when these agree position by position.
fn skeleton(c: u32) -> u32 {
    c & 0xffff
}

/// Relabels blocks in order of first appearance.
fn canonicalize(cells: &mut [u32]) {
    let mut map = [u8::MAX; 256];
    let mut next = 0u8;
    for c in cells.iter_mut() {
        if owner(*c) == 0 {
            continue;
        }
        let b = block(*c);
        if map[b] == u8::MAX {
            map[b] = next;
            next += 1;
        }
        *c = with_block(*c, map[b] as usize);
    }
}

/// Which entries `(p, q)` of the value matrix the states carry. Each slot
/// of a weight vector is the sum of its entries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tracking {
    Full,
    Diagonal,
    /// `v_p` of every bundle.
    Row(usize),
    /// One slot: the utilitarian welfare.
    Welfare,
    Entries(Vec<(usize, usize)>),
}

impl Tracking {
    pub fn slots(&self, n: usize) -> Vec<Vec<(usize, usize)>> {
        match self {
            Tracking::Full => (0..n).flat_map(|p| (0..n).map(move |q| vec![(p, q)])).collect(),
            Tracking::Diagonal => (0..n).map(|i| vec![(i, i)]).collect(),
            Tracking::Row(p) => (0..n).map(|q| vec![(*p, q)]).collect(),
            Tracking::Welfare => vec![(0..n).map(|i| (i, i)).collect()],
            Tracking::Entries(e) => e.iter().map(|&pq| vec![pq]).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DpOptions {
    pub tracking: Tracking,
    /// Forbid leaving base vertices unallocated.
    pub complete_only: bool,
    /// Skip distance bounds below the vertex's distance to the hub in the
    /// whole annotated graph; such bounds can never be realized.
    pub hub_distance_bound: bool,
    /// Abort when a node holds more states than this.
    pub max_states: usize,
    /// Drop states whose weights are dominated entrywise by a state with the
    /// same bag cells. Weights only grow towards the root, so this keeps every
    /// root slice maximum and is exact for queries monotone in the weights.
    pub prune_dominated: bool,
    /// Per-slot saturation caps. A capped slot stores `min(weight, cap)`,
    /// which is all a threshold query needs.
    pub caps: Option<Vec<u64>>,
    /// `owners[z][0]`: item `z` (original numbering) may stay unallocated;
    /// `owners[z][i + 1]`: agent `i` may take it.
    pub owners: Option<Vec<Vec<bool>>>,
}

impl Default for DpOptions {
    fn default() -> Self {
        DpOptions {
            tracking: Tracking::Full,
            complete_only: false,
            hub_distance_bound: true,
            max_states: 20_000_000,
            prune_dominated: false,
            caps: None,
            owners: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Back {
    Leaf,
    Unary(u32),
    Join(u32, u32),
}

type StateMap = IndexMap<Box<[u32]>, Back, FxBuildHasher>;
type Groups<'m> = IndexMap<&'m [u32], Vec<usize>, FxBuildHasher>;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DpStats {
    pub largest_node: usize,
    pub total_states: usize,
}

/// Reachable states of every node, with one backpointer each.
pub struct DpTables<'a> {
    ann: &'a AnnotatedInstance,
    nice: &'a NiceTreeDecomposition,
    slots: Vec<Vec<(usize, usize)>>,
    caps: Vec<u32>,
    nodes: Vec<StateMap>,
    pub stats: DpStats,
}

/// Natural log of the state-universe size for a bag of `k` vertices:
/// `(n+1)^k · (n+1)^k · k^k · (β+1)^k · (nW+1)^slots`.
fn log_state_bound(k: usize, n: usize, beta: usize, w: u64, slots: usize) -> f64 {
    let k = k as f64;
    let n1 = (n + 1) as f64;
    let weights = slots as f64 * ((n as u64 * w + 1) as f64).ln();
    2.0 * k * n1.ln() + k * k.max(1.0).ln() + k * ((beta + 1) as f64).ln() + weights
}

struct Ctx<'a> {
    ann: &'a AnnotatedInstance,
    n: usize,
    beta: usize,
    hub_dist: Vec<Vec<Distance>>,
    /// For each column `q`: `(slot, p)` of tracked entries `(p, q)`.
    by_column: Vec<Vec<(usize, usize)>>,
    caps: Vec<u32>,
    options: &'a DpOptions,
}

impl Ctx<'_> {
    fn leaf(&self, e: usize) -> StateMap {
        let cells = (0..self.n).map(|i| cell(i + 1, 0, i, true));
        let state: Box<[u32]> = cells.chain(std::iter::repeat_n(0, e)).collect();
        let mut map = StateMap::default();
        map.insert(state, Back::Leaf);
        map
    }

    fn introduce_vertex(&self, child: &StateMap, k: usize, pos: usize, z: usize) -> StateMap {
        let mut out = StateMap::default();
        let hub = self.ann.is_hub(z);
        let allowed = |o: usize| match (&self.options.owners, hub) {
            (Some(owners), false) => owners[self.ann.kept[z]][o],
            _ => true,
        };
        for (idx, st) in child.keys().enumerate() {
            let (cells, w) = st.split_at(k - 1);
            if !(self.options.complete_only && !hub) && allowed(0) {
                let mut s = Vec::with_capacity(st.len() + 1);
                s.extend_from_slice(&cells[..pos]);
                s.push(0);
                s.extend_from_slice(&cells[pos..]);
                s.extend_from_slice(w);
                out.entry(s.into_boxed_slice()).or_insert(Back::Unary(idx as u32));
            }
            for i in 0..self.n {
                if !allowed(i + 1) {
                    continue;
                }
                let Distance::Finite(hd) = self.hub_dist[i][z] else { continue };
                if hd > self.beta {
                    continue;
                }
                let lo = if self.options.hub_distance_bound { hd.max(1) } else { 1 };
                let mut w2 = w.to_vec();
                for &(e, p) in &self.by_column[i] {
                    w2[e] = (w2[e] + self.ann.instance.value(p, z) as u32).min(self.caps[e]);
                }
                for d in lo..=self.beta {
                    let mut s = Vec::with_capacity(st.len() + 1);
                    s.extend_from_slice(&cells[..pos]);
                    s.push(cell(i + 1, d, k, true));
                    s.extend_from_slice(&cells[pos..]);
                    canonicalize(&mut s[..k]);
                    s.extend_from_slice(&w2);
                    out.entry(s.into_boxed_slice()).or_insert(Back::Unary(idx as u32));
                }
            }
        }
        out
    }

    fn introduce_edge(&self, child: &StateMap, k: usize, pu: usize, pv: usize) -> StateMap {
        let mut out = StateMap::default();
        for (idx, st) in child.keys().enumerate() {
            let (cu, cv) = (st[pu], st[pv]);
            if owner(cu) != 0 && owner(cu) == owner(cv) && dist(cu).abs_diff(dist(cv)) > 1 {
                continue;
            }
            out.entry(st.clone()).or_insert(Back::Unary(idx as u32));
            if owner(cu) == 0 || owner(cu) != owner(cv) || block(cu) == block(cv) {
                continue;
            }
            for (x, y, py) in [(cu, cv, pv), (cv, cu, pu)] {
                if !is_root(y) || dist(y) != dist(x) + 1 {
                    continue;
                }
                let mut s = st.to_vec();
                let (from, to) = (block(y), block(x));
                for c in s[..k].iter_mut() {
                    if owner(*c) != 0 && block(*c) == from {
                        *c = with_block(*c, to);
                    }
                }
                s[py] &= !ROOT;
                canonicalize(&mut s[..k]);
                out.entry(s.into_boxed_slice()).or_insert(Back::Unary(idx as u32));
            }
        }
        out
    }

    fn forget(&self, child: &StateMap, k: usize, pos: usize) -> StateMap {
        let mut out = StateMap::default();
        for (idx, st) in child.keys().enumerate() {
            let c = st[pos];
            if owner(c) != 0 && is_root(c) {
                continue;
            }
            let mut s = st.to_vec();
            s.remove(pos);
            canonicalize(&mut s[..k]);
            out.entry(s.into_boxed_slice()).or_insert(Back::Unary(idx as u32));
        }
        out
    }

    /// Overlays the block forests of two states with equal skeletons.
    fn join_cells(a: &[u32], b: &[u32]) -> Option<Vec<u32>> {
        let k = a.len();
        let mut forest = Forest::new(k);
        for side in [a, b] {
            let mut rep = [usize::MAX; 256];
            for (x, &c) in side.iter().enumerate() {
                if owner(c) == 0 {
                    continue;
                }
                let r = &mut rep[block(c)];
                if *r == usize::MAX {
                    *r = x;
                } else if !forest.link(*r, x) {
                    return None;
                }
            }
        }
        let mut roots = vec![0usize; k];
        let mut out = Vec::with_capacity(k);
        for x in 0..k {
            if owner(a[x]) == 0 {
                out.push(0);
                continue;
            }
            let root = is_root(a[x]) && is_root(b[x]);
            let comp = forest.find(x);
            roots[comp] += usize::from(root);
            out.push(cell(owner(a[x]), dist(a[x]), comp, root));
        }
        if (0..k).any(|x| owner(a[x]) != 0 && roots[forest.find(x)] != 1) {
            return None;
        }
        canonicalize(&mut out);
        Some(out)
    }

    fn join(&self, left: &StateMap, right: &StateMap, k: usize, bag: &[usize], e: usize) -> StateMap {
        fn group(map: &StateMap, k: usize) -> Groups<'_> {
            let mut g = Groups::default();
            for (idx, st) in map.keys().enumerate() {
                g.entry(&st[..k]).or_default().push(idx);
            }
            g
        }
        let lg = group(left, k);
        let rg = group(right, k);
        let mut by_skeleton: IndexMap<Vec<u32>, Vec<&[u32]>, FxBuildHasher> = IndexMap::default();
        for cells in rg.keys() {
            by_skeleton.entry(cells.iter().map(|&c| skeleton(c)).collect()).or_default().push(cells);
        }
        let lkeys: Vec<&Box<[u32]>> = left.keys().collect();
        let rkeys: Vec<&Box<[u32]>> = right.keys().collect();
        let mut out = StateMap::default();
        for (lcells, lidx) in &lg {
            let sk: Vec<u32> = lcells.iter().map(|&c| skeleton(c)).collect();
            let Some(partners) = by_skeleton.get(&sk) else { continue };
            for rcells in partners {
                let Some(merged) = Self::join_cells(lcells, rcells) else { continue };
                // Bag vertices are counted on both sides.
                let mut corr = vec![0u32; e];
                for (x, &c) in merged.iter().enumerate() {
                    if owner(c) != 0 {
                        for &(ei, p) in &self.by_column[owner(c) - 1] {
                            corr[ei] += self.ann.instance.value(p, bag[x]) as u32;
                        }
                    }
                }
                for &li in lidx {
                    for &ri in &rg[rcells] {
                        let mut s = merged.clone();
                        let (wl, wr) = (&lkeys[li][k..], &rkeys[ri][k..]);
                        // A saturated side already certifies the cap: the
                        // other side's weight covers the shared bag vertices.
                        s.extend((0..e).map(|j| {
                            let cap = self.caps[j];
                            if wl[j] == cap || wr[j] == cap {
                                cap
                            } else {
                                (wl[j] + wr[j] - corr[j]).min(cap)
                            }
                        }));
                        out.entry(s.into_boxed_slice()).or_insert(Back::Join(li as u32, ri as u32));
                    }
                }
            }
        }
        out
    }
}

/// Keeps, for every bag configuration, the weight vectors not dominated by
/// another one, in their original order.
fn prune_dominated(map: StateMap, k: usize) -> StateMap {
    let mut groups = Groups::default();
    for (idx, st) in map.keys().enumerate() {
        groups.entry(&st[..k]).or_default().push(idx);
    }
    let mut keep = vec![false; map.len()];
    for members in groups.values() {
        let weights = |i: usize| &map.get_index(i).unwrap().0[k..];
        let mut order = members.clone();
        order.sort_by_key(|&i| std::cmp::Reverse(weights(i).iter().map(|&x| x as u64).sum::<u64>()));
        let mut front: Vec<usize> = Vec::new();
        for i in order {
            let w = weights(i);
            if !front.iter().any(|&f| weights(f).iter().zip(w).all(|(a, b)| a >= b)) {
                front.push(i);
                keep[i] = true;
            }
        }
    }
    map.into_iter().zip(keep).filter(|(_, k)| *k).map(|(kv, _)| kv).collect()
}

/// Runs the dynamic program. The decomposition's anchors must be the hubs.
pub fn run_dp<'a>(
    ann: &'a AnnotatedInstance,
    nice: &'a NiceTreeDecomposition,
    options: &DpOptions,
) -> Result<DpTables<'a>> {
    let n = ann.instance.agent_count();
    if nice.anchors != ann.hubs() {
        return Err(Error::Decomposition("anchors must be exactly the hubs".into()));
    }
    let w_max = ann.instance.max_total_value();
    if w_max > (u32::MAX / 2) as u64 {
        return Err(Error::Unsupported("total values above 2^31 are not supported by the treewidth DP".into()));
    }
    if n >= 255 || ann.beta >= 255 || nice.width() >= 255 {
        return Err(Error::Unsupported("too many agents, too large a radius or too wide a decomposition".into()));
    }
    let slots = options.tracking.slots(n);
    let e = slots.len();
    let mut by_column = vec![Vec::new(); n];
    for (s, pairs) in slots.iter().enumerate() {
        for &(p, q) in pairs {
            if p >= n || q >= n {
                return Err(Error::AgentOutOfRange { agent: p.max(q), len: n });
            }
            by_column[q].push((s, p));
        }
    }
    let caps: Vec<u32> = match &options.caps {
        None => vec![u32::MAX; e],
        Some(c) if c.len() == e => c.iter().map(|&x| x.min(u32::MAX as u64) as u32).collect(),
        Some(c) => return Err(Error::InvalidSpec(format!("{} caps for {e} tracked slots", c.len()))),
    };
    if slots.iter().any(|s| s.len() > 1) && n as u64 * w_max > (u32::MAX / 2) as u64 {
        return Err(Error::Unsupported("summed weights above 2^31 are not supported by the treewidth DP".into()));
    }
    let hub_dist = (0..n).map(|i| ann.graph().distances_from(ann.hub(i))).collect();
    if let Some(owners) = &options.owners {
        let items = ann.kept.last().map_or(0, |&z| z + 1);
        if owners.len() < items || owners.iter().any(|row| row.len() != n + 1) {
            return Err(Error::InvalidSpec("owner table does not match the instance".into()));
        }
    }
    let ctx = Ctx { ann, n, beta: ann.beta, hub_dist, by_column, caps: caps.clone(), options };
    let mut nodes: Vec<StateMap> = Vec::with_capacity(nice.nodes.len());
    let mut stats = DpStats::default();
    for node in &nice.nodes {
        let k = node.bag.len();
        let pos = |v: usize| node.bag.binary_search(&v).expect("vertex in bag");
        let map = match node.kind {
            NiceKind::Leaf => ctx.leaf(e),
            NiceKind::IntroduceVertex(z) => ctx.introduce_vertex(&nodes[node.children[0]], k, pos(z), z),
            NiceKind::IntroduceEdge(u, v) => ctx.introduce_edge(&nodes[node.children[0]], k, pos(u), pos(v)),
            NiceKind::Forget(z) => {
                let child = &nice.nodes[node.children[0]];
                let p = child.bag.binary_search(&z).expect("forgotten vertex in child bag");
                ctx.forget(&nodes[node.children[0]], k, p)
            }
            NiceKind::Join => ctx.join(&nodes[node.children[0]], &nodes[node.children[1]], k, &node.bag, e),
        };
        let map = if options.prune_dominated && e > 0 { prune_dominated(map, k) } else { map };
        if map.len() > options.max_states {
            return Err(Error::BudgetExceeded(format!(
                "a decomposition node reached {} states (limit {})",
                map.len(),
                options.max_states
            )));
        }
        assert!(
            (map.len() as f64).ln() <= log_state_bound(k, n, ann.beta, w_max, e) + 1e-9,
            "state count exceeds the size of the state universe"
        );
        stats.largest_node = stats.largest_node.max(map.len());
        stats.total_states += map.len();
        nodes.push(map);
    }
    Ok(DpTables { ann, nice, slots, caps, nodes, stats })
}

impl DpTables<'_> {
    /// The tracked `(p, q)` entries of each slot, in the order of weight
    /// vectors.
    pub fn slots(&self) -> &[Vec<(usize, usize)>] {
        &self.slots
    }

    /// Saturation cap of each slot (`u32::MAX` when uncapped).
    pub fn caps(&self) -> Vec<u64> {
        self.caps.iter().map(|&c| c as u64).collect()
    }

    fn root_map(&self) -> &StateMap {
        self.nodes.last().expect("decomposition has a root")
    }

    /// Weight vectors of the reachable root states, in discovery order.
    pub fn root_weights(&self) -> Vec<Vec<u64>> {
        let k = self.nice.anchors.len();
        self.root_map().keys().map(|s| s[k..].iter().map(|&x| x as u64).collect()).collect()
    }

    /// Distinct root weight vectors.
    pub fn root_slice(&self) -> BTreeSet<Vec<u64>> {
        self.root_weights().into_iter().collect()
    }

    /// Number of reachable root states.
    pub fn root_len(&self) -> usize {
        self.root_map().len()
    }

    /// Rebuilds an annotated allocation (over annotated vertices, hubs
    /// included) for the `index`-th root state.
    pub fn extract(&self, index: usize) -> Allocation {
        let n = self.ann.instance.agent_count();
        let mut bundles: Vec<BTreeSet<usize>> = (0..n).map(|i| BTreeSet::from([self.ann.hub(i)])).collect();
        let mut stack = vec![(self.nodes.len() - 1, index)];
        while let Some((t, idx)) = stack.pop() {
            let node = &self.nice.nodes[t];
            let (state, back) = self.nodes[t].get_index(idx).expect("state index in range");
            if let NiceKind::IntroduceVertex(z) = node.kind {
                let c = state[node.bag.binary_search(&z).unwrap()];
                if owner(c) != 0 {
                    bundles[owner(c) - 1].insert(z);
                }
            }
            match *back {
                Back::Leaf => {}
                Back::Unary(c) => stack.push((node.children[0], c as usize)),
                Back::Join(l, r) => {
                    stack.push((node.children[0], l as usize));
                    stack.push((node.children[1], r as usize));
                }
            }
        }
        Allocation::from_bundles(bundles)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_labels_follow_first_appearance() {
        let mut cells = vec![cell(1, 1, 5, true), 0, cell(2, 1, 3, true), cell(1, 2, 5, false)];
        canonicalize(&mut cells);
        assert_eq!(block(cells[0]), 0);
        assert_eq!(block(cells[2]), 1);
        assert_eq!(block(cells[3]), 0);
        assert_eq!(cells[1], 0);
    }

    #[test]
    fn join_cells_rejects_cycles_and_double_roots() {
        let a = [cell(1, 0, 0, true), cell(1, 1, 0, false)];
        assert_eq!(Ctx::join_cells(&a, &a), None);
        let single = [cell(1, 0, 0, true), cell(1, 1, 1, true)];
        assert_eq!(Ctx::join_cells(&single, &a).unwrap(), a.to_vec());
        assert_eq!(Ctx::join_cells(&single, &single).unwrap(), single.to_vec());
    }
}
