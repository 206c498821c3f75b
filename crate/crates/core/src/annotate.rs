//! Reduction from compact allocations to annotated ones. For every choice of
//! disjoint center sets `C_1..C_n` (at most `α` centers each), a hub vertex
//! `ẑ_i` of value zero is joined to the centers in `C_i`. A bundle is then
//! compact around `C_i` exactly when, together with `ẑ_i`, it lies within
//! distance `β + 1` of the hub.

use std::collections::BTreeSet;

use itertools::Itertools;

use crate::compactness::{ball_unchecked, is_annotated};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::model::{Allocation, CompactnessSpec, Instance};

/// Base instance extended by one hub per agent.
///
/// Vertices `0..k` are the kept base vertices (`kept[x]` is the original
/// vertex), vertices `k..k+n` are the hubs.
#[derive(Clone, Debug)]
pub struct AnnotatedInstance {
    pub instance: Instance,
    pub kept: Vec<usize>,
    /// Center sets in original vertex numbering.
    pub centers: Vec<Vec<usize>>,
    /// Radius around the hubs, `β + 1`.
    pub beta: usize,
    original_items: usize,
}

impl AnnotatedInstance {
    pub fn base_count(&self) -> usize {
        self.kept.len()
    }

    pub fn hub(&self, agent: usize) -> usize {
        self.kept.len() + agent
    }

    pub fn hubs(&self) -> Vec<usize> {
        (0..self.instance.agent_count()).map(|i| self.hub(i)).collect()
    }

    pub fn is_hub(&self, v: usize) -> bool {
        v >= self.kept.len()
    }

    pub fn graph(&self) -> &Graph {
        self.instance.graph()
    }

    /// Whether pruning removed any base vertex.
    pub fn pruned_any(&self) -> bool {
        self.kept.len() < self.original_items
    }

    /// Annotated vertex of an original base vertex, if kept.
    pub fn local_of(&self, original: usize) -> Option<usize> {
        self.kept.binary_search(&original).ok()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AnnotationOptions {
    /// Drop base vertices farther than `β` from every center.
    pub prune: bool,
    /// Only center tuples to which no further center can be added. Adding a
    /// center only adds hub edges, so every annotated allocation of a
    /// tuple stays annotated for its extensions.
    pub maximal_only: bool,
}

impl Default for AnnotationOptions {
    fn default() -> Self {
        AnnotationOptions { prune: true, maximal_only: false }
    }
}

/// All tuples of pairwise disjoint center sets of size at most `alpha`.
pub fn center_tuples(m: usize, n: usize, alpha: usize, maximal_only: bool) -> Vec<Vec<Vec<usize>>> {
    fn rec(
        i: usize,
        n: usize,
        m: usize,
        alpha: usize,
        used: &mut Vec<bool>,
        cur: &mut Vec<Vec<usize>>,
        maximal_only: bool,
        out: &mut Vec<Vec<Vec<usize>>>,
    ) {
        if i == n {
            let full = cur.iter().all(|c| c.len() == alpha) || used.iter().all(|&u| u);
            if !maximal_only || full {
                out.push(cur.clone());
            }
            return;
        }
        let free: Vec<usize> = (0..m).filter(|&v| !used[v]).collect();
        for k in 0..=alpha.min(free.len()) {
            for set in free.iter().copied().combinations(k) {
                for &v in &set {
                    used[v] = true;
                }
                cur.push(set);
                rec(i + 1, n, m, alpha, used, cur, maximal_only, out);
                let set = cur.pop().unwrap();
                for v in set {
                    used[v] = false;
                }
            }
        }
    }
    let mut out = Vec::new();
    rec(0, n, m, alpha, &mut vec![false; m], &mut Vec::new(), maximal_only, &mut out);
    out
}

/// Builds the annotated instance for one center tuple.
pub fn annotate(instance: &Instance, spec: &CompactnessSpec, centers: &[Vec<usize>], prune: bool) -> Result<AnnotatedInstance> {
    if spec.strong {
        return Err(Error::Unsupported("annotation applies to non-strong compactness only".into()));
    }
    let n = instance.agent_count();
    let m = instance.item_count();
    if centers.len() != n {
        return Err(Error::InvalidInstance("one center set per agent is required".into()));
    }
    let mut seen = vec![false; m];
    for set in centers {
        if set.len() > spec.alpha {
            return Err(Error::InvalidInstance(format!("center set {set:?} exceeds alpha")));
        }
        for &c in set {
            instance.graph().check_vertex(c)?;
            if std::mem::replace(&mut seen[c], true) {
                return Err(Error::InvalidInstance(format!("center {c} used twice")));
            }
        }
    }
    let kept: Vec<usize> = if prune {
        let mut near = BTreeSet::new();
        for &c in centers.iter().flatten() {
            near.extend(ball_unchecked(instance.graph(), c, spec.beta));
        }
        near.into_iter().collect()
    } else {
        (0..m).collect()
    };
    let sub = instance.graph().induced(&kept);
    let mut graph = sub.graph;
    for set in centers {
        let hub = graph.add_vertex();
        for &c in set {
            let local = kept.binary_search(&c).expect("centers are kept");
            graph.insert_edge(hub, local);
        }
    }
    let values = (0..n)
        .map(|i| kept.iter().map(|&z| instance.value(i, z)).chain(std::iter::repeat_n(0, n)).collect())
        .collect();
    let names = (0..n).map(|i| instance.name(i).map(str::to_owned)).collect();
    Ok(AnnotatedInstance {
        instance: Instance::with_names(graph, values, names)?,
        kept,
        centers: centers.to_vec(),
        beta: spec.beta + 1,
        original_items: m,
    })
}

/// One annotated instance per center tuple, with pruning.
pub fn build_annotated_instances<'a>(
    instance: &'a Instance,
    spec: &CompactnessSpec,
) -> Result<impl Iterator<Item = AnnotatedInstance> + 'a> {
    build_annotated_instances_with(instance, spec, AnnotationOptions::default())
}

pub fn build_annotated_instances_with<'a>(
    instance: &'a Instance,
    spec: &CompactnessSpec,
    options: AnnotationOptions,
) -> Result<impl Iterator<Item = AnnotatedInstance> + 'a> {
    if spec.strong {
        return Err(Error::Unsupported("annotation applies to non-strong compactness only".into()));
    }
    let spec = *spec;
    let tuples = center_tuples(instance.item_count(), instance.agent_count(), spec.alpha, options.maximal_only);
    Ok(tuples
        .into_iter()
        .map(move |t| annotate(instance, &spec, &t, options.prune).expect("generated tuples are valid")))
}

/// Checks that `allocation` (over annotated vertices) is annotated: bundle
/// `i` contains hub `i`, no other hub, and lies within distance `β + 1` of the
/// hub inside the bundle.
pub fn check_annotated(ann: &AnnotatedInstance, allocation: &Allocation) -> Result<()> {
    let n = ann.instance.agent_count();
    if allocation.agent_count() != n {
        return Err(Error::InvalidAllocation("wrong number of bundles".into()));
    }
    for (i, bundle) in allocation.bundles().iter().enumerate() {
        if !bundle.contains(&ann.hub(i)) {
            return Err(Error::InvalidAllocation(format!("bundle {i} lacks its hub")));
        }
        if bundle.iter().any(|&v| ann.is_hub(v) && v != ann.hub(i)) {
            return Err(Error::InvalidAllocation(format!("bundle {i} holds another hub")));
        }
        let items: Vec<usize> = bundle.iter().copied().collect();
        let sub = ann.graph().induced(&items);
        let hub_local = sub.vertices.binary_search(&ann.hub(i)).unwrap();
        if !is_annotated(&sub.graph, hub_local, ann.beta)? {
            return Err(Error::InvalidAllocation(format!("bundle {i} is not within {} of its hub", ann.beta)));
        }
    }
    Ok(())
}

/// Drops the hubs and maps bundles back to original vertices.
pub fn lift_allocation(ann: &AnnotatedInstance, allocation: &Allocation) -> Result<Allocation> {
    check_annotated(ann, allocation)?;
    Ok(Allocation::from_bundles(
        allocation
            .bundles()
            .iter()
            .map(|b| b.iter().filter(|&&v| !ann.is_hub(v)).map(|&v| ann.kept[v]).collect())
            .collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compactness::is_compact_allocation;

    #[test]
    fn tuple_counts() {
        for m in 0..6 {
            assert_eq!(center_tuples(m, 1, 1, false).len(), m + 1);
        }
        // Two agents, one center each: (m+1)^2 minus the m shared choices.
        assert_eq!(center_tuples(4, 2, 1, false).len(), 25 - 4);
        assert_eq!(center_tuples(4, 2, 1, true).len(), 12);
        assert_eq!(center_tuples(1, 2, 1, true).len(), 2);
        assert_eq!(center_tuples(0, 2, 3, true), vec![vec![Vec::<usize>::new(), vec![]]]);
    }

    #[test]
    fn hubs_follow_kept_vertices() {
        let inst = Instance::new(Graph::path(5), vec![vec![1; 5]; 2]).unwrap();
        let spec = CompactnessSpec::compact(1, 1);
        let ann = annotate(&inst, &spec, &[vec![0], vec![]], true).unwrap();
        assert_eq!(ann.kept, vec![0, 1]);
        assert!(ann.pruned_any());
        assert_eq!(ann.hub(0), 2);
        assert_eq!(ann.graph().neighbors(2), &[0]);
        assert!(ann.graph().neighbors(3).is_empty());
        assert_eq!(ann.instance.values()[0], vec![1, 1, 0, 0]);
        assert_eq!(ann.beta, 2);
        let full = annotate(&inst, &spec, &[vec![2], vec![4]], true).unwrap();
        assert_eq!(full.kept, vec![1, 2, 3, 4]);
        let unpruned = annotate(&inst, &spec, &[vec![0], vec![]], false).unwrap();
        assert_eq!(unpruned.kept.len(), 5);
    }

    #[test]
    fn lifting() {
        let inst = Instance::new(Graph::path(3), vec![vec![1, 2, 3]]).unwrap();
        let spec = CompactnessSpec::compact(1, 1);
        let ann = annotate(&inst, &spec, &[vec![1]], true).unwrap();
        let hub = ann.hub(0);
        let only_hub = Allocation::from_bundles(vec![[hub].into()]);
        assert_eq!(lift_allocation(&ann, &only_hub).unwrap(), Allocation::empty(1));
        let bundle = Allocation::from_bundles(vec![[hub, 1, 2].into()]);
        let lifted = lift_allocation(&ann, &bundle).unwrap();
        assert_eq!(lifted.to_vecs(), vec![vec![1, 2]]);
        assert!(is_compact_allocation(&inst, &lifted, &spec));
        let missing = Allocation::from_bundles(vec![[1].into()]);
        assert!(lift_allocation(&ann, &missing).is_err());
        // Vertex 0 is at distance 3 from the hub once vertex 1 is left out.
        let far = Allocation::from_bundles(vec![[hub, 0].into()]);
        assert!(lift_allocation(&ann, &far).is_err());
    }

    #[test]
    fn strong_is_rejected() {
        let inst = Instance::new(Graph::path(3), vec![vec![1; 3]]).unwrap();
        assert!(build_annotated_instances(&inst, &CompactnessSpec::strong(1, 1)).is_err());
    }
}
