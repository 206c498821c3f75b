mod common;

use std::collections::BTreeSet;

use compactfd::annotate::{annotate, check_annotated, AnnotatedInstance};
use compactfd::oracle::{mms_oracle, solve_oracle, OracleBudget};
use compactfd::treewidth::{greedy_decompose, TreeDecomposition};
use compactfd::tw_dp::{
    annotated_decomposition, max_welfare_tw, maximin_allocation_tw, mms_tw, run_dp, solve_tw, DpOptions, Tracking,
    TwOptions,
};
use compactfd::{CompactnessSpec, FairnessGoal, Graph, Instance};

fn root_slice(ann: &AnnotatedInstance, td: &TreeDecomposition, options: &DpOptions) -> BTreeSet<Vec<u64>> {
    let nice = annotated_decomposition(ann, td).unwrap();
    let tables = run_dp(ann, &nice, options).unwrap();
    // Every root state must come with a witness that realizes it.
    for (k, w) in tables.root_weights().iter().enumerate() {
        let a = tables.extract(k);
        check_annotated(ann, &a).unwrap();
        let flat: Vec<u64> = a.value_matrix(&ann.instance).concat();
        if options.tracking == Tracking::Full {
            assert_eq!(&flat, w);
        }
    }
    tables.root_slice()
}

fn full() -> DpOptions {
    DpOptions { tracking: Tracking::Full, ..DpOptions::default() }
}

#[test]
fn single_edge_hand_trace() {
    // Base vertex u with v_1(u) = 5; the hub is joined to u and the
    // annotated radius is 1.
    let inst = Instance::new(Graph::empty(1), vec![vec![5]]).unwrap();
    let ann = annotate(&inst, &CompactnessSpec::compact(1, 0), &[vec![0]], true).unwrap();
    assert_eq!(ann.beta, 1);
    let td = TreeDecomposition::new(vec![vec![0]], vec![]);
    let slice = root_slice(&ann, &td, &full());
    assert_eq!(slice, BTreeSet::from([vec![0], vec![5]]));
}

#[test]
fn vertex_outside_every_ball_is_pruned() {
    let inst = Instance::new(Graph::empty(2), vec![vec![3, 7]]).unwrap();
    let ann = annotate(&inst, &CompactnessSpec::compact(1, 1), &[vec![0]], true).unwrap();
    assert!(ann.pruned_any());
    let td = greedy_decompose(inst.graph());
    assert_eq!(root_slice(&ann, &td, &full()), BTreeSet::from([vec![0], vec![3]]));
    let lonely = annotate(&inst, &CompactnessSpec::compact(1, 1), &[vec![]], true).unwrap();
    assert_eq!(root_slice(&lonely, &td, &full()), BTreeSet::from([vec![0]]));
}

#[test]
fn two_hubs_start_from_the_zero_matrix() {
    let inst = Instance::new(Graph::empty(2), vec![vec![1, 2], vec![4, 8]]).unwrap();
    let ann = annotate(&inst, &CompactnessSpec::compact(1, 0), &[vec![0], vec![1]], true).unwrap();
    let td = greedy_decompose(inst.graph());
    let slice = root_slice(&ann, &td, &full());
    // Each agent may take or leave its own center.
    let expected: BTreeSet<Vec<u64>> = [
        vec![0, 0, 0, 0],
        vec![1, 0, 4, 0],
        vec![0, 2, 0, 8],
        vec![1, 2, 4, 8],
    ]
    .into();
    assert_eq!(slice, expected);
}

#[test]
fn star_split_across_a_join() {
    // Star with center 0 and leaves 1, 2; the decomposition puts each leaf
    // in its own bag, so the nice decomposition joins the two halves.
    let graph = Graph::star(2);
    let inst = Instance::new(graph, vec![vec![1, 2, 4]]).unwrap();
    let ann = annotate(&inst, &CompactnessSpec::compact(1, 1), &[vec![0]], true).unwrap();
    let td = TreeDecomposition::new(vec![vec![0], vec![0, 1], vec![0, 2]], vec![(0, 1), (0, 2)]);
    let slice = root_slice(&ann, &td, &full());
    // Bundles around center 0: nothing, or 0 with any subset of leaves. A
    // leaf without the center is out of reach.
    let expected: BTreeSet<Vec<u64>> = [0, 1, 3, 5, 7].iter().map(|&w| vec![w]).collect();
    assert_eq!(slice, expected);
}

#[test]
fn slices_are_deterministic_and_independent_of_hub_pruning() {
    for case in common::corpus(60, 3).iter().filter(|c| !c.spec.strong && c.instance.item_count() <= 6) {
        let n = case.instance.agent_count();
        let centers: Vec<Vec<usize>> = (0..n).map(|i| if i < case.instance.item_count() { vec![i] } else { vec![] }).collect();
        let ann = annotate(&case.instance, &case.spec, &centers, true).unwrap();
        let td = greedy_decompose(case.instance.graph());
        let first = root_slice(&ann, &td, &full());
        assert_eq!(root_slice(&ann, &td, &full()), first);
        let loose = DpOptions { hub_distance_bound: false, ..full() };
        assert_eq!(root_slice(&ann, &td, &loose), first, "case {}", case.id);
    }
}

#[test]
fn state_guard_is_enforced() {
    let inst = Instance::new(Graph::complete(5), vec![vec![1; 5], vec![2; 5]]).unwrap();
    let ann = annotate(&inst, &CompactnessSpec::compact(1, 1), &[vec![0], vec![1]], true).unwrap();
    let nice = annotated_decomposition(&ann, &greedy_decompose(inst.graph())).unwrap();
    let tight = DpOptions { max_states: 10, ..full() };
    assert!(run_dp(&ann, &nice, &tight).is_err());
}

#[test]
fn single_agent_share_is_the_best_compact_bundle() {
    let inst = Instance::new(Graph::path(5), vec![vec![4, 1, 0, 6, 6]]).unwrap();
    let opts = TwOptions::default();
    assert_eq!(mms_tw(&inst, &CompactnessSpec::compact(1, 1), 0, &opts).unwrap(), 12);
    assert_eq!(mms_tw(&inst, &CompactnessSpec::compact(1, 0), 0, &opts).unwrap(), 6);
    assert_eq!(mms_tw(&inst, &CompactnessSpec::compact(2, 0), 0, &opts).unwrap(), 12);
    let zero = Instance::new(Graph::path(3), vec![vec![0; 3], vec![0; 3]]).unwrap();
    assert_eq!(mms_tw(&zero, &CompactnessSpec::compact(1, 1), 1, &opts).unwrap(), 0);
}

#[test]
fn grid_instances_match_the_oracle() {
    // 3x3 grid, a planar graph of treewidth 3.
    let idx = |r: usize, c: usize| 3 * r + c;
    let mut edges = Vec::new();
    for r in 0..3 {
        for c in 0..3 {
            if c + 1 < 3 {
                edges.push((idx(r, c), idx(r, c + 1)));
            }
            if r + 1 < 3 {
                edges.push((idx(r, c), idx(r + 1, c)));
            }
        }
    }
    let graph = Graph::from_edges(9, &edges).unwrap();
    let inst = Instance::new(graph, vec![vec![3, 0, 1, 2, 2, 0, 1, 4, 1], vec![0, 2, 2, 1, 3, 3, 2, 0, 1]]).unwrap();
    let budget = OracleBudget::unlimited();
    let opts = TwOptions::default();
    for spec in [CompactnessSpec::compact(1, 1), CompactnessSpec::compact(2, 1), CompactnessSpec::compact(1, 2)] {
        for agent in 0..2 {
            assert_eq!(mms_tw(&inst, &spec, agent, &opts).unwrap(), mms_oracle(&inst, &spec, agent, &budget).unwrap());
        }
        for goal in [FairnessGoal::Proportional, FairnessGoal::MaxWelfare, FairnessGoal::EnvyFreeComplete] {
            let tw = solve_tw(&inst, &spec, goal, &opts).unwrap();
            let oracle = solve_oracle(&inst, &spec, goal, &budget).unwrap();
            assert_eq!(tw.is_some(), oracle.is_some(), "{spec} {goal}");
        }
    }
}

#[test]
fn welfare_and_share_thresholds() {
    let inst = Instance::new(Graph::path(4), vec![vec![5, 1, 1, 5], vec![1, 4, 4, 1]]).unwrap();
    let opts = TwOptions::default();
    let spec = CompactnessSpec::compact(1, 1);
    assert_eq!(max_welfare_tw(&inst, &spec, &opts).unwrap(), 14);
    assert!(solve_tw(&inst, &spec, FairnessGoal::MaxWelfare, &opts).unwrap().is_none());
    assert!(solve_tw(&inst, &CompactnessSpec::compact(2, 0), FairnessGoal::MaxWelfare, &opts).unwrap().is_some());
    assert!(maximin_allocation_tw(&inst, &spec, &[5, 8], &opts).unwrap().is_some());
    assert!(maximin_allocation_tw(&inst, &spec, &[6, 8], &opts).unwrap().is_none());
    assert!(maximin_allocation_tw(&inst, &spec, &[1], &opts).is_err());
}
