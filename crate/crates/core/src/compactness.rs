//! Distances, balls and recognizers for compact, strongly compact and
//! annotated graphs.

use itertools::Itertools;

use crate::error::Result;
use crate::graph::{Distance, Graph};
use crate::model::{Allocation, CompactnessSpec, Instance};

/// Centers of a ball cover: every vertex is within distance `beta` of one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CenterWitness {
    pub centers: Vec<usize>,
}

pub fn distance(graph: &Graph, u: usize, v: usize) -> Result<Distance> {
    graph.check_vertex(u)?;
    graph.check_vertex(v)?;
    Ok(graph.distances_from(u)[v])
}

/// Vertices within distance `beta` of `z`, sorted.
pub fn ball(graph: &Graph, z: usize, beta: usize) -> Result<Vec<usize>> {
    graph.check_vertex(z)?;
    Ok(ball_unchecked(graph, z, beta))
}

pub(crate) fn ball_unchecked(graph: &Graph, z: usize, beta: usize) -> Vec<usize> {
    graph
        .distances_from(z)
        .iter()
        .enumerate()
        .filter(|(_, d)| d.at_most(beta))
        .map(|(v, _)| v)
        .collect()
}

/// Largest pairwise distance. Graphs with at most one vertex have diameter 0.
pub fn diameter(graph: &Graph) -> Distance {
    (0..graph.vertex_count())
        .flat_map(|v| graph.distances_from(v))
        .max()
        .unwrap_or(Distance::Finite(0))
}

/// Searches for at most `alpha` centers whose `beta`-balls cover the graph.
/// Returns the smallest cover, lexicographically first among those.
pub fn is_compact(graph: &Graph, alpha: usize, beta: usize) -> Option<CenterWitness> {
    let n = graph.vertex_count();
    let balls: Vec<Vec<bool>> = (0..n)
        .map(|z| graph.distances_from(z).iter().map(|d| d.at_most(beta)).collect())
        .collect();
    for k in 0..=alpha.min(n) {
        for centers in (0..n).combinations(k) {
            if (0..n).all(|v| centers.iter().any(|&c| balls[c][v])) {
                return Some(CenterWitness { centers });
            }
        }
    }
    None
}

/// Searches for at most `alpha` vertex groups covering the graph such that
/// any two vertices of a group are within distance `beta` in the graph.
/// Returns the non-empty groups.
pub fn is_strongly_compact(graph: &Graph, alpha: usize, beta: usize) -> Option<Vec<Vec<usize>>> {
    let n = graph.vertex_count();
    if n == 0 {
        return Some(Vec::new());
    }
    let dist = graph.distance_matrix();
    if alpha == 1 {
        let ok = dist.iter().flatten().all(|d| d.at_most(beta));
        return ok.then(|| vec![(0..n).collect()]);
    }
    let close: Vec<Vec<bool>> = dist.iter().map(|row| row.iter().map(|d| d.at_most(beta)).collect()).collect();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    assign_groups(0, n, alpha, &close, &mut groups).then_some(groups)
}

/// Backtracking over group assignments; a vertex joins an existing group or
/// opens the next one, so group order never produces symmetric duplicates.
fn assign_groups(v: usize, n: usize, alpha: usize, close: &[Vec<bool>], groups: &mut Vec<Vec<usize>>) -> bool {
    if v == n {
        return true;
    }
    for g in 0..groups.len() {
        if groups[g].iter().all(|&u| close[u][v]) {
            groups[g].push(v);
            if assign_groups(v + 1, n, alpha, close, groups) {
                return true;
            }
            groups[g].pop();
        }
    }
    if groups.len() < alpha {
        groups.push(vec![v]);
        if assign_groups(v + 1, n, alpha, close, groups) {
            return true;
        }
        groups.pop();
    }
    false
}

/// Whether `G[bundle]` has the shape required by `spec`.
pub fn is_compact_bundle(graph: &Graph, bundle: &[usize], spec: &CompactnessSpec) -> bool {
    let sub = graph.induced(bundle);
    if spec.strong {
        is_strongly_compact(&sub.graph, spec.alpha, spec.beta).is_some()
    } else {
        is_compact(&sub.graph, spec.alpha, spec.beta).is_some()
    }
}

/// Every bundle induces a (strongly) compact subgraph; distances are measured
/// inside the bundle.
pub fn is_compact_allocation(instance: &Instance, allocation: &Allocation, spec: &CompactnessSpec) -> bool {
    allocation.bundles().iter().all(|b| {
        let items: Vec<usize> = b.iter().copied().collect();
        is_compact_bundle(instance.graph(), &items, spec)
    })
}

/// A radius equivalent to `beta` for every bundle of `graph`. Shortest paths
/// inside a bundle are induced paths of the graph, so once `beta` reaches
/// the longest induced path a ball is already its whole component. Gives
/// up and returns `beta` after `budget` search steps.
pub fn effective_radius(graph: &Graph, beta: usize, budget: usize) -> usize {
    struct Search<'g> {
        graph: &'g Graph,
        on_path: Vec<bool>,
        /// Number of path vertices adjacent to each vertex.
        touching: Vec<usize>,
        longest: usize,
        steps: usize,
    }
    impl Search<'_> {
        fn push(&mut self, v: usize, delta: isize) {
            self.on_path[v] = delta > 0;
            for &w in self.graph.neighbors(v) {
                self.touching[w] = self.touching[w].wrapping_add_signed(delta);
            }
        }
        /// Extends an induced path with `edges` edges ending at `last`;
        /// false once the search should stop.
        fn extend(&mut self, last: usize, edges: usize, beta: usize, budget: usize) -> bool {
            self.longest = self.longest.max(edges);
            self.steps += 1;
            if self.longest >= beta || self.steps > budget {
                return false;
            }
            for k in 0..self.graph.neighbors(last).len() {
                let w = self.graph.neighbors(last)[k];
                if self.on_path[w] || self.touching[w] != 1 {
                    continue;
                }
                self.push(w, 1);
                let go_on = self.extend(w, edges + 1, beta, budget);
                self.push(w, -1);
                if !go_on {
                    return false;
                }
            }
            true
        }
    }
    let m = graph.vertex_count();
    let mut search = Search { graph, on_path: vec![false; m], touching: vec![0; m], longest: 0, steps: 0 };
    for s in 0..m {
        search.push(s, 1);
        let go_on = search.extend(s, 0, beta, budget);
        search.push(s, -1);
        if !go_on {
            break;
        }
    }
    if search.steps > budget {
        beta
    } else {
        search.longest.min(beta)
    }
}

/// Every vertex lies within distance `beta` of `z_hat`.
pub fn is_annotated(graph: &Graph, z_hat: usize, beta: usize) -> Result<bool> {
    graph.check_vertex(z_hat)?;
    Ok(graph.distances_from(z_hat).iter().all(|d| d.at_most(beta)))
}
