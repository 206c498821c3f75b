//! Rooted partitions and their acyclic join.

use crate::error::{Error, Result};

/// A partition of a vertex set in which every block has one root.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RootedPartition {
    blocks: Vec<Vec<usize>>,
    roots: Vec<usize>,
}

impl RootedPartition {
    /// `roots[k]` is the root of `blocks[k]`.
    pub fn new(blocks: Vec<Vec<usize>>, roots: Vec<usize>) -> Result<Self> {
        if blocks.len() != roots.len() {
            return Err(Error::InvalidInstance("one root per block is required".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for (block, root) in blocks.iter().zip(&roots) {
            if block.is_empty() || !block.contains(root) {
                return Err(Error::InvalidInstance("every block needs a root inside it".into()));
            }
            for &x in block {
                if !seen.insert(x) {
                    return Err(Error::InvalidInstance(format!("element {x} is in two blocks")));
                }
            }
        }
        let mut pairs: Vec<(Vec<usize>, usize)> = blocks
            .into_iter()
            .map(|mut b| {
                b.sort_unstable();
                b
            })
            .zip(roots)
            .collect();
        pairs.sort();
        let (blocks, roots) = pairs.into_iter().unzip();
        Ok(RootedPartition { blocks, roots })
    }

    /// Every element in its own block.
    pub fn singletons(elements: &[usize]) -> Self {
        RootedPartition::new(elements.iter().map(|&x| vec![x]).collect(), elements.to_vec()).unwrap()
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn roots(&self) -> &[usize] {
        &self.roots
    }

    pub fn elements(&self) -> Vec<usize> {
        let mut all: Vec<usize> = self.blocks.iter().flatten().copied().collect();
        all.sort_unstable();
        all
    }
}

/// Union-find with cycle detection, over small index ranges.
pub(crate) struct Forest {
    parent: Vec<usize>,
}

impl Forest {
    pub(crate) fn new(n: usize) -> Self {
        Forest { parent: (0..n).collect() }
    }

    pub(crate) fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.parent[r] != r {
            r = self.parent[r];
        }
        let mut y = x;
        while self.parent[y] != r {
            let next = self.parent[y];
            self.parent[y] = r;
            y = next;
        }
        r
    }

    /// Adds edge `ab`; false if it closes a cycle.
    pub(crate) fn link(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        true
    }
}

/// Whether `joined` is an acyclic join of `left` and `right` over `s`: each
/// block is drawn as a star on its smallest element, the two drawings are
/// overlaid as a multigraph, and the overlay must be a forest whose
/// components are the blocks of `joined`, with roots `R' ∩ R''`.
pub fn acyclic_join_check(
    s: &[usize],
    left: &RootedPartition,
    right: &RootedPartition,
    joined: &RootedPartition,
) -> bool {
    let mut elems = s.to_vec();
    elems.sort_unstable();
    elems.dedup();
    if [left, right, joined].iter().any(|p| p.elements() != elems) {
        return false;
    }
    let index = |x: usize| elems.binary_search(&x).unwrap();
    let mut forest = Forest::new(elems.len());
    for part in [left, right] {
        for block in part.blocks() {
            for &x in &block[1..] {
                if !forest.link(index(block[0]), index(x)) {
                    return false;
                }
            }
        }
    }
    for block in joined.blocks() {
        let r = forest.find(index(block[0]));
        if block.iter().any(|&x| forest.find(index(x)) != r) {
            return false;
        }
    }
    let components = (0..elems.len()).filter(|&i| forest.find(i) == i).count();
    if components != joined.blocks().len() {
        return false;
    }
    let mut common: Vec<usize> = left.roots().iter().copied().filter(|r| right.roots().contains(r)).collect();
    common.sort_unstable();
    let mut roots = joined.roots().to_vec();
    roots.sort_unstable();
    common == roots
}
