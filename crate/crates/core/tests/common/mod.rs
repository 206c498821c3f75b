#![allow(dead_code)]

use compactfd::{CompactnessSpec, Graph, Instance};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Shape {
    Sparse,
    Dense,
    Path,
    Cycle,
    Tree,
    Star,
    Edgeless,
}

pub const SHAPES: [Shape; 7] =
    [Shape::Sparse, Shape::Dense, Shape::Path, Shape::Cycle, Shape::Tree, Shape::Star, Shape::Edgeless];

/// Random graph on `m` vertices with vertex labels shuffled.
pub fn random_graph(rng: &mut impl Rng, m: usize, shape: Shape) -> Graph {
    let mut edges = Vec::new();
    match shape {
        Shape::Sparse | Shape::Dense => {
            let p = if shape == Shape::Sparse { 0.3 } else { 0.6 };
            for u in 0..m {
                for v in u + 1..m {
                    if rng.gen_bool(p) {
                        edges.push((u, v));
                    }
                }
            }
        }
        Shape::Path => edges.extend((1..m).map(|v| (v - 1, v))),
        Shape::Cycle => {
            edges.extend((1..m).map(|v| (v - 1, v)));
            if m >= 3 {
                edges.push((m - 1, 0));
            }
        }
        Shape::Tree => edges.extend((1..m).map(|v| (rng.gen_range(0..v), v))),
        Shape::Star => edges.extend((1..m).map(|v| (0, v))),
        Shape::Edgeless => {}
    }
    let mut perm: Vec<usize> = (0..m).collect();
    perm.shuffle(rng);
    let edges: Vec<(usize, usize)> = edges.into_iter().map(|(u, v)| (perm[u], perm[v])).collect();
    Graph::from_edges(m, &edges).unwrap()
}

pub fn random_values(rng: &mut impl Rng, n: usize, m: usize, max: u64) -> Vec<Vec<u64>> {
    (0..n).map(|_| (0..m).map(|_| rng.gen_range(0..=max)).collect()).collect()
}

#[derive(Clone, Debug)]
pub struct Case {
    pub id: usize,
    pub instance: Instance,
    pub spec: CompactnessSpec,
    pub shape: Shape,
}

/// The fixed oracle-agreement corpus: `m ≤ 8`, `n ≤ 3`, values `≤ 12`,
/// `α ≤ 3`, `β ≤ 2`, both compactness flavours.
pub fn corpus(count: usize, seed: u64) -> Vec<Case> {
    let mut r = rng(seed);
    (0..count)
        .map(|id| {
            let shape = SHAPES[id % SHAPES.len()];
            let n = r.gen_range(1..=3);
            let max_m = if n == 3 { 7 } else { 8 };
            let m = r.gen_range(0..=max_m);
            let graph = random_graph(&mut r, m, shape);
            let values = random_values(&mut r, n, m, 12);
            let alpha = r.gen_range(1..=3);
            let beta = r.gen_range(0..=2);
            let strong = id % 2 == 1;
            Case {
                id,
                instance: Instance::new(graph, values).unwrap(),
                spec: CompactnessSpec::new(alpha, beta, strong).unwrap(),
                shape,
            }
        })
        .collect()
}

/// Random 2-tree: start from an edge and repeatedly attach a new vertex to
/// both ends of an existing edge. Treewidth exactly 2 once `m ≥ 3`.
pub fn two_tree(rng: &mut impl Rng, m: usize) -> Graph {
    if m < 2 {
        return Graph::empty(m);
    }
    let mut edges = vec![(0, 1)];
    for v in 2..m {
        let (a, b) = edges[rng.gen_range(0..edges.len())];
        edges.push((a, v));
        edges.push((b, v));
    }
    Graph::from_edges(m, &edges).unwrap()
}

/// Tree decomposition from an elimination order: each vertex's bag holds it
/// and its later neighbours in the fill-in graph, hung below the bag of the
/// earliest of those neighbours.
pub fn elimination_decomposition(graph: &Graph, order: &[usize]) -> compactfd::treewidth::TreeDecomposition {
    use std::collections::BTreeSet;
    let m = graph.vertex_count();
    if m == 0 {
        return compactfd::treewidth::TreeDecomposition::new(vec![vec![]], vec![]);
    }
    let mut pos = vec![0; m];
    for (i, &v) in order.iter().enumerate() {
        pos[v] = i;
    }
    let mut adj: Vec<BTreeSet<usize>> = (0..m).map(|v| graph.neighbors(v).iter().copied().collect()).collect();
    let mut bags = Vec::with_capacity(m);
    let mut parent_vertex = vec![None; m];
    for &v in order {
        let later: Vec<usize> = adj[v].iter().copied().filter(|&u| pos[u] > pos[v]).collect();
        for &a in &later {
            for &b in &later {
                if a != b {
                    adj[a].insert(b);
                }
            }
        }
        parent_vertex[v] = later.iter().copied().min_by_key(|&u| pos[u]);
        let mut bag = later;
        bag.push(v);
        bags.push(bag);
    }
    // Bags are indexed by elimination position; link roots of different
    // components in a chain so the result is a tree.
    let mut edges = Vec::new();
    let mut last_root = None;
    for (i, &v) in order.iter().enumerate() {
        match parent_vertex[v] {
            Some(p) => edges.push((i, pos[p])),
            None => {
                if let Some(r) = last_root {
                    edges.push((r, i));
                }
                last_root = Some(i);
            }
        }
    }
    compactfd::treewidth::TreeDecomposition::new(bags, edges)
}
