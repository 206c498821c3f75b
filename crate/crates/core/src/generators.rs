//! Instance builders from three classical hard problems. Each builder's
//! output has a fair compact allocation exactly when the source instance is
//! a yes-instance, so generated instances come with known answers.
//!
//! The reductions are stated with rational values normalized so every agent
//! values all items at 1; here every value is multiplied by a common
//! denominator `D`, so each agent's total is exactly `D`.

use itertools::Itertools;
use num_integer::Integer;

use crate::compactness::diameter;
use crate::error::{Error, Result};
use crate::graph::{Distance, Graph};
use crate::model::{CompactnessSpec, FairnessGoal, Instance};

/// A generated instance together with the problem it encodes.
#[derive(Clone, Debug)]
pub struct Reduction {
    pub instance: Instance,
    pub spec: CompactnessSpec,
    pub goal: FairnessGoal,
}

/// Non-negative integers to be split into two halves of equal sum.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartitionSource {
    numbers: Vec<u64>,
}

impl PartitionSource {
    pub fn new(numbers: Vec<u64>) -> Result<Self> {
        let sum = numbers.iter().try_fold(0u64, |a, &x| a.checked_add(x));
        match sum {
            None => Err(Error::InvalidSource("sum overflows".into())),
            Some(s) if s % 2 == 1 => Err(Error::InvalidSource(format!("sum {s} is odd"))),
            Some(_) => Ok(PartitionSource { numbers }),
        }
    }

    pub fn numbers(&self) -> &[u64] {
        &self.numbers
    }

    /// Subset-sum check for a subset summing to half the total.
    pub fn has_solution(&self) -> bool {
        let half = self.numbers.iter().sum::<u64>() / 2;
        let mut reachable = std::collections::BTreeSet::from([0u64]);
        for &x in &self.numbers {
            let next: Vec<u64> = reachable.iter().map(|&r| r + x).filter(|&r| r <= half).collect();
            reachable.extend(next);
        }
        reachable.contains(&half)
    }
}

/// Two agents with identical values `x_j` on a clique: every subset is
/// compact, so a proportional (or envy-free and complete, or envy-free and
/// Pareto-optimal) allocation is exactly an equal-sum split.
pub fn gen_from_partition(source: &PartitionSource) -> Result<Instance> {
    let m = source.numbers.len();
    let names = vec![Some("first".to_string()), Some("second".to_string())];
    Instance::with_names(Graph::complete(m), vec![source.numbers.clone(); 2], names)
}

/// Exact cover by `α`-sets: a universe `0..αs` and a family of `α`-subsets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct XacSource {
    alpha: usize,
    universe: usize,
    sets: Vec<Vec<usize>>,
}

impl XacSource {
    pub fn new(alpha: usize, universe: usize, sets: Vec<Vec<usize>>) -> Result<Self> {
        if alpha == 0 || !universe.is_multiple_of(alpha) {
            return Err(Error::InvalidSource(format!("universe size {universe} is not a multiple of {alpha}")));
        }
        let mut sets = sets;
        for set in &mut sets {
            set.sort_unstable();
            set.dedup();
            if set.len() != alpha {
                return Err(Error::InvalidSource(format!("set {set:?} does not have {alpha} distinct elements")));
            }
            if let Some(&x) = set.iter().find(|&&x| x >= universe) {
                return Err(Error::InvalidSource(format!("element {x} outside the universe 0..{universe}")));
            }
        }
        Ok(XacSource { alpha, universe, sets })
    }

    pub fn alpha(&self) -> usize {
        self.alpha
    }

    /// Number of sets an exact cover uses.
    pub fn cover_size(&self) -> usize {
        self.universe / self.alpha
    }

    pub fn sets(&self) -> &[Vec<usize>] {
        &self.sets
    }

    /// Backtracking search: cover the smallest uncovered element with each
    /// disjoint set containing it.
    pub fn has_exact_cover(&self) -> bool {
        fn search(sets: &[Vec<usize>], covered: &mut Vec<bool>) -> bool {
            let Some(x) = covered.iter().position(|&c| !c) else { return true };
            for set in sets.iter().filter(|s| s.contains(&x)) {
                if set.iter().any(|&y| covered[y]) {
                    continue;
                }
                set.iter().for_each(|&y| covered[y] = true);
                let found = search(sets, covered);
                set.iter().for_each(|&y| covered[y] = false);
                if found {
                    return true;
                }
            }
            false
        }
        search(&self.sets, &mut vec![false; self.universe])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum XacVariant {
    Proportional,
    EnvyFreeComplete,
    EnvyFreeParetoOptimal,
}

/// Edgeless instance with one agent per set. Items are the universe
/// elements, then `r - s` auxiliary items, then (proportional variant only)
/// a special item wanted by an extra dummy agent. On an edgeless graph a
/// bundle is compact iff it has at most `α` items, in either flavour.
///
/// Denominators: `α(r+1)` for the proportional variant, `α(r-s+1)` for the
/// envy-free ones.
pub fn gen_from_xac(source: &XacSource, variant: XacVariant, beta: usize, strong: bool) -> Result<Reduction> {
    let alpha = source.alpha;
    let (r, s) = (source.sets.len(), source.cover_size());
    if alpha < 3 {
        return Err(Error::InvalidSource(format!("the reduction needs sets of size at least 3, got {alpha}")));
    }
    if r <= s {
        return Err(Error::InvalidSource(format!("need more sets ({r}) than cover size ({s})")));
    }
    let a = alpha as u64;
    let aux = r - s;
    let set_rows = |aux_value: u64| -> Vec<Vec<u64>> {
        source
            .sets
            .iter()
            .map(|set| {
                let mut row: Vec<u64> = (0..source.universe).map(|x| u64::from(set.contains(&x))).collect();
                row.extend(std::iter::repeat_n(aux_value, aux));
                row
            })
            .collect()
    };
    let mut names: Vec<Option<String>> = (0..r).map(|i| Some(format!("set{i}"))).collect();
    let (values, goal) = match variant {
        XacVariant::Proportional => {
            // Per agent: α·(1/(α(r+1))) + (r-s)/(r+1) + s/(r+1) = 1.
            let mut values = set_rows(a);
            for row in &mut values {
                row.push(a * s as u64);
            }
            let mut dummy = vec![0; source.universe + aux];
            dummy.push(a * (r as u64 + 1));
            values.push(dummy);
            names.push(Some("dummy".into()));
            (values, FairnessGoal::Proportional)
        }
        XacVariant::EnvyFreeComplete | XacVariant::EnvyFreeParetoOptimal => {
            let goal = if variant == XacVariant::EnvyFreeComplete {
                FairnessGoal::EnvyFreeComplete
            } else {
                FairnessGoal::EnvyFreeParetoOptimal
            };
            (set_rows(a), goal)
        }
    };
    let m = values[0].len();
    let instance = Instance::with_names(Graph::empty(m), values, names)?;
    Ok(Reduction { instance, spec: CompactnessSpec::new(alpha, beta, strong)?, goal })
}

/// Does `graph` contain exactly `k` vertices inducing diameter at most `β`?
pub fn has_club(graph: &Graph, k: usize, beta: usize) -> bool {
    (0..graph.vertex_count()).combinations(k).any(|set| match diameter(&graph.induced(&set).graph) {
        Distance::Finite(d) => d <= beta,
        Distance::Infinite => false,
    })
}

/// A graph `H`, a target size `k` and a radius `β`.
#[derive(Clone, Debug)]
pub struct ClubSource {
    pub graph: Graph,
    pub k: usize,
    pub beta: usize,
}

impl ClubSource {
    pub fn new(graph: Graph, k: usize, beta: usize) -> Result<Self> {
        let s = graph.vertex_count();
        if !(1 < k && k < s) {
            return Err(Error::InvalidSource(format!("need 1 < k < {s}, got k = {k}")));
        }
        Ok(ClubSource { graph, k, beta })
    }

    pub fn has_solution(&self) -> bool {
        has_club(&self.graph, self.k, self.beta)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClubVariant {
    Proportional,
    EnvyFreeComplete,
}

/// Strongly compact instance built around `H`: a special agent must collect
/// a `k`-set of `H` of small diameter, while regular agents and dummies soak
/// up the rest.
///
/// Proportional variant: items are `H`'s vertices, `α - 1` items only the
/// special agent wants, and `s + k - 1` dummy items; agents are the special
/// one, `s - k` regular ones and `s + k - 1` dummies. Denominator
/// `2αks(s+k-1)`.
///
/// Envy-free variant: `H` is first padded with isolated vertices until
/// `s + α - 1 = p(k + α - 1)`; items are `H`'s vertices, `α - 1` items for
/// the special agent, `p` dummy items and `k` items for the `s` regular
/// agents; agents are the special one, `s` regular ones and `p` dummies.
/// Denominator `lcm(2(s+α-1), 2p, k+1)`.
pub fn gen_from_club(source: &ClubSource, alpha: usize, variant: ClubVariant) -> Result<Reduction> {
    if alpha == 0 {
        return Err(Error::InvalidSpec("alpha must be at least 1".into()));
    }
    let spec = CompactnessSpec::new(alpha, source.beta, true)?;
    let k = source.k as u64;
    let a = alpha as u64;
    match variant {
        ClubVariant::Proportional => {
            let s = source.graph.vertex_count();
            let sz = s as u64;
            let ys = s + source.k - 1;
            let d = 2 * a * k * sz * (ys as u64);
            let m = s + (alpha - 1) + ys;
            let mut values = Vec::with_capacity(2 * s);
            let mut names = Vec::with_capacity(2 * s);
            let mut special = vec![ys as u64; s];
            special.extend(std::iter::repeat_n(k * ys as u64, alpha - 1));
            special.extend(std::iter::repeat_n(2 * a * k * sz - sz - a * k + k, ys));
            values.push(special);
            names.push(Some("special".to_string()));
            for i in 0..s - source.k {
                let mut row = vec![a * k * ys as u64; s];
                row.extend(std::iter::repeat_n(0, alpha - 1));
                row.extend(std::iter::repeat_n(a * k * sz, ys));
                values.push(row);
                names.push(Some(format!("regular{i}")));
            }
            for j in 0..ys {
                let mut row = vec![0; m];
                row[s + alpha - 1 + j] = d;
                values.push(row);
                names.push(Some(format!("dummy{j}")));
            }
            let graph = padded(&source.graph, m);
            Ok(Reduction { instance: Instance::with_names(graph, values, names)?, spec, goal: FairnessGoal::Proportional })
        }
        ClubVariant::EnvyFreeComplete => {
            let base = alpha - 1 + source.k;
            let p = (source.graph.vertex_count() + alpha - 1).div_ceil(base);
            let s = p * base + 1 - alpha;
            let (pz, sz) = (p as u64, s as u64);
            let d = (2 * (sz + a - 1)).lcm(&(2 * pz)).lcm(&(k + 1));
            let m = s + (alpha - 1) + p + source.k;
            let (y0, yp0) = (s + alpha - 1, s + alpha - 1 + p);
            let mut values = Vec::with_capacity(1 + s + p);
            let mut names = Vec::with_capacity(1 + s + p);
            let mut special = vec![0; m];
            special[..y0].fill(d / (2 * (sz + a - 1)));
            special[y0..yp0].fill(d / (2 * pz));
            values.push(special);
            names.push(Some("special".to_string()));
            for i in 0..s {
                let mut row = vec![0; m];
                row[i] = d / (k + 1);
                row[yp0..].fill(d / (k + 1));
                values.push(row);
                names.push(Some(format!("regular{i}")));
            }
            for j in 0..p {
                let mut row = vec![0; m];
                row[y0 + j] = d;
                values.push(row);
                names.push(Some(format!("dummy{j}")));
            }
            let graph = padded(&source.graph, m);
            Ok(Reduction {
                instance: Instance::with_names(graph, values, names)?,
                spec,
                goal: FairnessGoal::EnvyFreeComplete,
            })
        }
    }
}

/// `graph` plus isolated vertices up to `m` vertices in total.
fn padded(graph: &Graph, m: usize) -> Graph {
    let edges: Vec<(usize, usize)> = graph.edges().collect();
    Graph::from_edges(m, &edges).expect("original edges stay in range")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_sources() {
        assert!(PartitionSource::new(vec![1, 1, 1]).is_err());
        assert!(PartitionSource::new(vec![3, 1, 2, 2]).unwrap().has_solution());
        assert!(PartitionSource::new(vec![2, 2]).unwrap().has_solution());
        assert!(!PartitionSource::new(vec![1, 1, 4]).unwrap().has_solution());
        let inst = gen_from_partition(&PartitionSource::new(vec![3, 1, 2, 2]).unwrap()).unwrap();
        assert_eq!(inst.agent_count(), 2);
        assert_eq!(inst.graph().edge_count(), 6);
    }

    #[test]
    fn xac_rows_sum_to_denominator() {
        let src = XacSource::new(3, 6, vec![vec![0, 1, 2], vec![3, 4, 5], vec![0, 3, 4]]).unwrap();
        assert!(src.has_exact_cover());
        let red = gen_from_xac(&src, XacVariant::Proportional, 0, false).unwrap();
        assert_eq!((red.instance.agent_count(), red.instance.item_count()), (4, 8));
        for i in 0..4 {
            assert_eq!(red.instance.total_value(i).unwrap(), 3 * 4);
        }
        let red = gen_from_xac(&src, XacVariant::EnvyFreeComplete, 0, false).unwrap();
        assert_eq!((red.instance.agent_count(), red.instance.item_count()), (3, 7));
        for i in 0..3 {
            assert_eq!(red.instance.total_value(i).unwrap(), 3 * 2);
        }
        let no = XacSource::new(3, 6, vec![vec![0, 1, 2], vec![0, 3, 4], vec![1, 3, 5]]).unwrap();
        assert!(!no.has_exact_cover());
        assert!(XacSource::new(3, 6, vec![vec![0, 1]]).is_err());
        assert!(gen_from_xac(&XacSource::new(3, 6, vec![vec![0, 1, 2], vec![3, 4, 5]]).unwrap(), XacVariant::Proportional, 0, false).is_err());
    }

    #[test]
    fn club_sources_and_totals() {
        assert!(!has_club(&Graph::cycle(5), 4, 2));
        assert!(has_club(&Graph::complete(4), 3, 1));
        // A cycle on 2β+1 vertices has no β-club of size exactly 2β once
        // β ≥ 2; for β = 1 any edge of the triangle is one.
        assert!(has_club(&Graph::cycle(3), 2, 1));
        for beta in 2..5 {
            assert!(!has_club(&Graph::cycle(2 * beta + 1), 2 * beta, beta));
        }
        let src = ClubSource::new(Graph::path(4), 2, 1).unwrap();
        for alpha in 1..=3 {
            for variant in [ClubVariant::Proportional, ClubVariant::EnvyFreeComplete] {
                let red = gen_from_club(&src, alpha, variant).unwrap();
                let totals: Vec<u64> =
                    (0..red.instance.agent_count()).map(|i| red.instance.total_value(i).unwrap()).collect();
                assert!(totals.iter().all(|&t| t == totals[0]), "{variant:?} α={alpha}: {totals:?}");
            }
        }
        assert!(ClubSource::new(Graph::path(3), 3, 1).is_err());
    }

    #[test]
    fn club_padding_reaches_a_multiple() {
        let src = ClubSource::new(Graph::path(3), 2, 1).unwrap();
        let red = gen_from_club(&src, 1, ClubVariant::EnvyFreeComplete).unwrap();
        // s = 3 is padded to 4 = 2·2, so p = 2: 1 + 4 + 2 agents, 4 + 2 + 2 items.
        assert_eq!((red.instance.agent_count(), red.instance.item_count()), (7, 8));
    }
}
