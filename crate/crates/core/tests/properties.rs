mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;

use compactfd::annotate::{annotate, check_annotated, lift_allocation};
use compactfd::compactness::{ball, effective_radius, is_compact, is_compact_allocation, is_compact_bundle, is_strongly_compact};
use compactfd::enumerate::{enumerate_compact_allocations, EnumBudget};
use compactfd::fairness::{is_complete, is_envy_free, is_proportional};
use compactfd::generators::{gen_from_club, gen_from_xac, ClubSource, ClubVariant, XacSource, XacVariant};
use compactfd::matching::{solve_ef_one_item, solve_mms_10, solve_prop_10};
use compactfd::oracle::{
    admissible_allocations, enumerate_allocations, mms_oracle, solve_oracle, solve_oracle_pruned, BundleShape, OracleBudget,
};
use compactfd::path_dp::{agents_dp, types_dp, PathInstance};
use compactfd::treewidth::{greedy_decompose, nicefy, validate_nice, validate_td};
use compactfd::{Allocation, CompactnessSpec, Graph, Instance};

fn graph_from_bits(m: usize, bits: &[bool]) -> Graph {
    let mut edges = Vec::new();
    let mut k = 0;
    for u in 0..m {
        for v in u + 1..m {
            if bits[k] {
                edges.push((u, v));
            }
            k += 1;
        }
    }
    Graph::from_edges(m, &edges).unwrap()
}

fn graph(max_m: usize) -> impl Strategy<Value = Graph> {
    (0..=max_m).prop_flat_map(|m| {
        prop::collection::vec(prop::bool::weighted(0.35), m * m.saturating_sub(1) / 2)
            .prop_map(move |bits| graph_from_bits(m, &bits))
    })
}

fn instance(max_m: usize, max_n: usize) -> impl Strategy<Value = Instance> {
    (graph(max_m), 1..=max_n).prop_flat_map(|(g, n)| {
        let m = g.vertex_count();
        prop::collection::vec(prop::collection::vec(0u64..=9, m), n)
            .prop_map(move |values| Instance::new(g.clone(), values).unwrap())
    })
}

fn spec() -> impl Strategy<Value = CompactnessSpec> {
    (1usize..=2, 0usize..=2, any::<bool>()).prop_map(|(a, b, s)| CompactnessSpec::new(a, b, s).unwrap())
}

fn budget() -> OracleBudget {
    OracleBudget::unlimited()
}

/// A random assignment of items to agents or to no one.
fn allocation_from(instance: &Instance, digits: &[usize]) -> Allocation {
    let n = instance.agent_count();
    let mut bundles = vec![BTreeSet::new(); n];
    for (z, &d) in digits.iter().enumerate().take(instance.item_count()) {
        if d % (n + 1) > 0 {
            bundles[d % (n + 1) - 1].insert(z);
        }
    }
    Allocation::new(instance, bundles).unwrap()
}

fn scaled(instance: &Instance, agent: usize, factor: u64) -> Instance {
    let mut values = instance.values().to_vec();
    for v in values[agent].iter_mut() {
        *v *= factor;
    }
    Instance::new(instance.graph().clone(), values).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn own_value_never_exceeds_total(inst in instance(7, 3), digits in prop::collection::vec(0usize..4, 7)) {
        let a = allocation_from(&inst, &digits);
        for i in 0..inst.agent_count() {
            prop_assert!(inst.bundle_value(i, a.bundle(i)) <= inst.total_value(i).unwrap());
        }
        if is_complete(&inst, &a) {
            let sizes: usize = a.bundles().iter().map(|b| b.len()).sum();
            prop_assert_eq!(sizes, inst.item_count());
        }
    }

    #[test]
    fn fairness_ignores_scaling_one_agent(
        inst in instance(6, 3),
        digits in prop::collection::vec(0usize..4, 6),
        factor in 1u64..5,
        agent in 0usize..3,
    ) {
        let agent = agent % inst.agent_count();
        let a = allocation_from(&inst, &digits);
        let s = scaled(&inst, agent, factor);
        prop_assert_eq!(is_proportional(&inst, &a), is_proportional(&s, &a));
        prop_assert_eq!(is_envy_free(&inst, &a), is_envy_free(&s, &a));
    }

    #[test]
    fn recognition_chain(g in graph(8), alpha in 1usize..=3, beta in 0usize..=3) {
        let strong = is_strongly_compact(&g, alpha, beta).is_some();
        let compact = is_compact(&g, alpha, beta).is_some();
        prop_assert!(!strong || compact);
        prop_assert!(!compact || is_strongly_compact(&g, alpha, 2 * beta).is_some());
        if beta == 0 {
            prop_assert_eq!(compact, g.vertex_count() <= alpha);
            prop_assert_eq!(strong, compact);
        }
        if let Some(w) = is_compact(&g, alpha, beta) {
            prop_assert!(w.centers.len() <= alpha);
        }
    }

    #[test]
    fn balls_grow_at_most_geometrically(g in graph(9), beta in 0usize..=3) {
        let d = g.max_degree();
        let bound: usize = (0..=beta).map(|j| d.pow(j as u32)).sum();
        for z in 0..g.vertex_count() {
            prop_assert!(ball(&g, z, beta).unwrap().len() <= bound.max(1));
        }
    }

    #[test]
    fn effective_radius_changes_no_bundle(g in graph(7), beta in 0usize..=6, alpha in 1usize..=2, mask in any::<u8>()) {
        let r = effective_radius(&g, beta, 1 << 16);
        prop_assert!(r <= beta);
        let bundle: Vec<usize> = (0..g.vertex_count()).filter(|&z| mask >> z & 1 == 1).collect();
        for strong in [false, true] {
            let a = CompactnessSpec::new(alpha, beta, strong).unwrap();
            let b = CompactnessSpec::new(alpha, r, strong).unwrap();
            prop_assert_eq!(is_compact_bundle(&g, &bundle, &a), is_compact_bundle(&g, &bundle, &b));
        }
    }

    #[test]
    fn allocated_region_is_compact_with_more_centers(inst in instance(6, 3), alpha in 1usize..=2, beta in 0usize..=2) {
        let spec = CompactnessSpec::compact(alpha, beta);
        let n = inst.agent_count();
        for a in admissible_allocations(&inst, BundleShape::Compact(spec), &budget()).unwrap().iter().step_by(7) {
            let region: Vec<usize> = a.bundles().iter().flatten().copied().collect();
            let sub = inst.graph().induced(&region).graph;
            prop_assert!(is_compact(&sub, n * alpha, beta).is_some());
        }
    }

    #[test]
    fn pruned_oracle_matches_the_plain_scan(inst in instance(7, 3), spec in spec()) {
        let goal = compactfd::FairnessGoal::Proportional;
        prop_assert_eq!(
            solve_oracle_pruned(&inst, &spec, goal, &budget()).unwrap(),
            solve_oracle(&inst, &spec, goal, &budget()).unwrap()
        );
    }

    #[test]
    fn shares_grow_with_alpha_and_beta(inst in instance(6, 3), agent in 0usize..3) {
        let agent = agent % inst.agent_count();
        let share = |a, b| mms_oracle(&inst, &CompactnessSpec::compact(a, b), agent, &budget()).unwrap();
        prop_assert!(share(1, 0) <= share(1, 1));
        prop_assert!(share(1, 1) <= share(1, 2));
        prop_assert!(share(1, 1) <= share(2, 1));
    }

    #[test]
    fn enumeration_matches_the_oracle(inst in instance(6, 2), spec in spec()) {
        let listed: BTreeSet<Vec<Vec<usize>>> = enumerate_compact_allocations(&inst, &spec, &EnumBudget::default())
            .unwrap()
            .map(|a| a.to_vecs())
            .collect();
        let scanned: BTreeSet<Vec<Vec<usize>>> = admissible_allocations(&inst, BundleShape::Compact(spec), &budget())
            .unwrap()
            .iter()
            .map(|a| a.to_vecs())
            .collect();
        prop_assert_eq!(listed, scanned);
    }

    #[test]
    fn single_item_solvers_hand_out_single_items(inst in instance(6, 3)) {
        let single = CompactnessSpec::compact(1, 0);
        for a in [solve_prop_10(&inst), solve_mms_10(&inst)].into_iter().flatten() {
            prop_assert!(a.bundles().iter().all(|b| b.len() <= 1));
            prop_assert!(is_compact_allocation(&inst, &a, &single));
        }
        if let Some(a) = solve_ef_one_item(&inst) {
            prop_assert!(a.bundles().iter().all(|b| b.len() == 1));
            prop_assert!(is_envy_free(&inst, &a));
        }
    }

    #[test]
    fn path_bundles_are_short_blocks(
        m in 1usize..=8,
        rows in prop::collection::vec(prop::collection::vec(0u64..=6, 8), 1..=3),
        beta in 0usize..=2,
        strong in any::<bool>(),
    ) {
        let values: Vec<Vec<u64>> = rows.iter().map(|r| r[..m].to_vec()).collect();
        let inst = Instance::new(Graph::path(m), values).unwrap();
        let path = PathInstance::from_instance(&inst).unwrap();
        let longest = if strong { beta + 1 } else { 2 * beta + 1 };
        for report in [agents_dp(&path, beta, strong), types_dp(&path, beta, strong)] {
            if let Some(a) = report.allocation {
                prop_assert!(is_proportional(&inst, &a));
                for b in a.bundles().iter().filter(|b| !b.is_empty()) {
                    let (lo, hi) = (*b.first().unwrap(), *b.last().unwrap());
                    prop_assert_eq!(hi - lo + 1, b.len());
                    prop_assert!(b.len() <= longest);
                }
            }
        }
    }

    #[test]
    fn compact_allocations_survive_annotation(inst in instance(5, 2), alpha in 1usize..=2, beta in 0usize..=2) {
        // Read the centers off each compact allocation, annotate around them
        // and lift back.
        let spec = CompactnessSpec::compact(alpha, beta);
        let n = inst.agent_count();
        for a in admissible_allocations(&inst, BundleShape::Compact(spec), &budget()).unwrap().iter().step_by(5) {
            let centers: Vec<Vec<usize>> = a
                .bundles()
                .iter()
                .map(|b| {
                    let items: Vec<usize> = b.iter().copied().collect();
                    let sub = inst.graph().induced(&items);
                    is_compact(&sub.graph, alpha, beta).map(|w| w.centers.iter().map(|&c| sub.to_parent(c)).collect()).unwrap()
                })
                .collect();
            let ann = annotate(&inst, &spec, &centers, true).unwrap();
            let mut bundles: Vec<BTreeSet<usize>> = Vec::new();
            for i in 0..n {
                let mut b: BTreeSet<usize> = a.bundle(i).iter().map(|&z| ann.local_of(z).unwrap()).collect();
                b.insert(ann.hub(i));
                bundles.push(b);
            }
            let annotated = Allocation::new(&ann.instance, bundles).unwrap();
            prop_assert!(check_annotated(&ann, &annotated).is_ok());
            let lifted = lift_allocation(&ann, &annotated).unwrap();
            prop_assert_eq!(lifted.to_vecs(), a.to_vecs());
            prop_assert!(is_compact_allocation(&inst, &lifted, &spec));
        }
    }

    #[test]
    fn decompositions_validate(g in graph(9)) {
        let td = greedy_decompose(&g);
        prop_assert!(validate_td(&g, &td).is_ok());
        let nice = nicefy(&td, &g, &[]).unwrap();
        prop_assert!(validate_nice(&g, &nice).is_ok());
    }
}

#[test]
fn enumeration_visits_every_assignment() {
    let inst = Instance::new(Graph::path(4), vec![vec![1; 4], vec![2; 4]]).unwrap();
    assert_eq!(enumerate_allocations(&inst, &budget()).unwrap().count(), 81);
}

#[test]
fn reductions_normalize_totals() {
    let xac = XacSource::new(3, 6, vec![vec![0, 1, 2], vec![3, 4, 5], vec![1, 2, 3]]).unwrap();
    for variant in [XacVariant::Proportional, XacVariant::EnvyFreeComplete, XacVariant::EnvyFreeParetoOptimal] {
        let red = gen_from_xac(&xac, variant, 0, false).unwrap();
        let totals: BTreeSet<u64> = (0..red.instance.agent_count()).map(|i| red.instance.total_value(i).unwrap()).collect();
        assert_eq!(totals.len(), 1, "{variant:?}: {totals:?}");
    }
    let club = ClubSource::new(Graph::path(3), 2, 1).unwrap();
    for (alpha, variant) in [(1, ClubVariant::Proportional), (2, ClubVariant::Proportional), (1, ClubVariant::EnvyFreeComplete)] {
        let red = gen_from_club(&club, alpha, variant).unwrap();
        let totals: BTreeSet<u64> = (0..red.instance.agent_count()).map(|i| red.instance.total_value(i).unwrap()).collect();
        assert_eq!(totals.len(), 1, "{variant:?}: {totals:?}");
    }
}
