//! Fairness drivers: run the DP on every annotated instance and query the
//! reachable root weights.

use std::collections::BTreeSet;

use rayon::prelude::*;

use crate::annotate::{annotate, center_tuples, check_annotated, lift_allocation, AnnotatedInstance};
use crate::compactness::{ball_unchecked, effective_radius, is_compact_allocation};
use crate::error::{Error, Result};
use crate::fairness::{is_complete, is_envy_free, is_proportional, max_unconstrained_welfare, meets_shares};
use crate::model::{Allocation, CompactnessSpec, FairnessGoal, Instance};
use crate::oracle::{solve_oracle, OracleBudget};
use crate::treewidth::{greedy_decompose, nicefy, validate_td, NiceTreeDecomposition, TreeDecomposition};
use crate::tw_dp::dp::{run_dp, DpOptions, DpTables, Tracking};

#[derive(Clone, Debug)]
pub struct TwOptions {
    /// Decomposition of the item graph; a min-fill decomposition is computed
    /// when absent.
    pub decomposition: Option<TreeDecomposition>,
    pub hub_distance_bound: bool,
    /// Only solve center tuples that cannot be extended (see
    /// [`crate::annotate::AnnotationOptions::maximal_only`]).
    pub maximal_tuples: bool,
    pub max_states: usize,
    /// Prune dominated states for goals monotone in the bundle values.
    pub prune_dominated: bool,
    /// Solve annotated instances on the rayon thread pool.
    pub parallel: bool,
    /// Budget for goals that are answered by the oracle.
    pub oracle_budget: OracleBudget,
}

impl Default for TwOptions {
    fn default() -> Self {
        TwOptions {
            decomposition: None,
            hub_distance_bound: true,
            maximal_tuples: true,
            max_states: DpOptions::default().max_states,
            prune_dominated: true,
            parallel: true,
            oracle_budget: OracleBudget::default(),
        }
    }
}

/// Restricts a decomposition of the item graph to the kept vertices of an
/// annotated instance and makes it nice with the hubs as anchors.
pub fn annotated_decomposition(ann: &AnnotatedInstance, base: &TreeDecomposition) -> Result<NiceTreeDecomposition> {
    let bags = base
        .bags
        .iter()
        .map(|bag| bag.iter().filter_map(|&v| ann.local_of(v)).collect())
        .collect();
    let td = TreeDecomposition::new(bags, base.edges.clone());
    nicefy(&td, ann.graph(), &ann.hubs())
}

const RADIUS_SEARCH_STEPS: usize = 1 << 20;

struct Plan<'a> {
    instance: &'a Instance,
    spec: CompactnessSpec,
    td: TreeDecomposition,
    tuples: Vec<Vec<Vec<usize>>>,
    options: &'a TwOptions,
}

impl<'a> Plan<'a> {
    fn new(instance: &'a Instance, spec: &CompactnessSpec, options: &'a TwOptions) -> Result<Self> {
        if spec.strong {
            return Err(Error::Unsupported("the treewidth DP handles non-strong compactness only".into()));
        }
        let td = match &options.decomposition {
            Some(td) => {
                validate_td(instance.graph(), td).map_err(Error::Decomposition)?;
                td.clone()
            }
            None => greedy_decompose(instance.graph()),
        };
        let tuples = center_tuples(instance.item_count(), instance.agent_count(), spec.alpha, options.maximal_tuples);
        // Distance labels range over 0..=β, so a smaller equivalent radius
        // shrinks every table.
        let beta = effective_radius(instance.graph(), spec.beta, RADIUS_SEARCH_STEPS);
        let spec = CompactnessSpec { beta, ..*spec };
        Ok(Plan { instance, spec, td, tuples, options })
    }

    /// Items within `β` of each center set: every bundle around those
    /// centers lies inside.
    fn reach_sets(&self, centers: &[Vec<usize>]) -> Vec<BTreeSet<usize>> {
        centers
            .iter()
            .map(|set| set.iter().flat_map(|&c| ball_unchecked(self.instance.graph(), c, self.spec.beta)).collect())
            .collect()
    }

    /// `v_i` of agent `i`'s reach set, an upper bound on `v_i(π(i))`.
    fn reach_values(&self, centers: &[Vec<usize>]) -> Vec<u64> {
        self.reach_sets(centers).iter().enumerate().map(|(i, near)| self.instance.bundle_value(i, near)).collect()
    }

    /// Runs the DP on every tuple accepted by `keep` and returns the first
    /// result (in tuple order) produced by `query`.
    fn first<R: Send>(
        &self,
        dp: &DpOptions,
        keep: impl Fn(&[Vec<usize>]) -> bool + Sync,
        skip_pruned: bool,
        query: impl Fn(&AnnotatedInstance, &DpTables) -> Result<Option<R>> + Sync,
    ) -> Result<Option<R>> {
        let run = |centers: &Vec<Vec<usize>>| -> Option<Result<R>> {
            if !keep(centers) {
                return None;
            }
            let outcome = (|| {
                let ann = annotate(self.instance, &self.spec, centers, true)?;
                if skip_pruned && ann.pruned_any() {
                    return Ok(None);
                }
                let nice = annotated_decomposition(&ann, &self.td)?;
                let tables = run_dp(&ann, &nice, dp)?;
                query(&ann, &tables)
            })();
            outcome.transpose()
        };
        let found = if self.options.parallel {
            self.tuples.par_iter().find_map_first(run)
        } else {
            self.tuples.iter().find_map(run)
        };
        found.transpose()
    }

    /// Largest per-tuple value over `tuples`, where each tuple comes with an
    /// upper bound on its value and `value` reads the value off the root
    /// states. `value` must commute with capping every slot at `t`: capped
    /// runs return `min(value, t)`. Tuples are visited by decreasing bound;
    /// each is first checked with caps at `best + 1`, and only tuples that
    /// beat the incumbent are solved uncapped. The scan stops once no bound
    /// exceeds the incumbent.
    fn max_over<F>(
        &self,
        dp: &DpOptions,
        mut tuples: Vec<(u64, &Vec<Vec<usize>>)>,
        value: F,
    ) -> Result<Option<u64>>
    where
        F: Fn(&DpTables) -> Option<u64> + Sync,
    {
        let slots = dp.tracking.slots(self.instance.agent_count()).len();
        let run = |centers: &Vec<Vec<usize>>, cap: Option<u64>| -> Result<Option<u64>> {
            let ann = annotate(self.instance, &self.spec, centers, true)?;
            let nice = annotated_decomposition(&ann, &self.td)?;
            let options = DpOptions { caps: cap.map(|t| vec![t; slots]), ..dp.clone() };
            let tables = run_dp(&ann, &nice, &options)?;
            Ok(value(&tables))
        };
        tuples.sort_by_key(|&(bound, _)| std::cmp::Reverse(bound));
        let chunk = if self.options.parallel { rayon::current_num_threads().max(1) } else { 1 };
        let mut best: Option<u64> = None;
        for batch in tuples.chunks(chunk) {
            let threshold = best.map_or(0, |b| b + 1);
            if best.is_some() && batch[0].0 < threshold {
                break;
            }
            let check = |&(bound, c): &(u64, &Vec<Vec<usize>>)| -> Result<Option<u64>> {
                if bound < threshold {
                    return Ok(None);
                }
                match run(c, Some(threshold))? {
                    Some(v) if v >= threshold => run(c, None),
                    _ => Ok(None),
                }
            };
            let results: Vec<Result<Option<u64>>> = if self.options.parallel {
                batch.par_iter().map(check).collect()
            } else {
                batch.iter().map(check).collect()
            };
            for v in results.into_iter().collect::<Result<Vec<_>>>()?.into_iter().flatten() {
                best = Some(best.map_or(v, |b| b.max(v)));
            }
        }
        Ok(best)
    }

    /// DP options; `monotone` marks queries that only look for large
    /// weights, where dominated states may be dropped.
    fn dp(&self, tracking: Tracking, complete_only: bool, monotone: bool) -> DpOptions {
        DpOptions {
            tracking,
            complete_only,
            hub_distance_bound: self.options.hub_distance_bound,
            max_states: self.options.max_states,
            prune_dominated: monotone && self.options.prune_dominated,
            caps: None,
            owners: None,
        }
    }

    /// Monotone DP options with slots saturated at `caps`.
    fn capped(&self, tracking: Tracking, caps: Vec<u64>) -> DpOptions {
        DpOptions { caps: Some(caps), ..self.dp(tracking, false, true) }
    }
}

/// Rebuilds the allocation behind a root state, lifts it to the item graph
/// and checks that its values match the state's weights.
fn witness(ann: &AnnotatedInstance, tables: &DpTables, index: usize) -> Result<Allocation> {
    let annotated = tables.extract(index);
    check_annotated(ann, &annotated).map_err(|e| Error::Internal(format!("extracted allocation: {e}")))?;
    let weights = &tables.root_weights()[index];
    let caps = tables.caps();
    for (e, pairs) in tables.slots().iter().enumerate() {
        let value: u64 = pairs.iter().map(|&(p, q)| ann.instance.bundle_value(p, annotated.bundle(q))).sum();
        if value.min(caps[e]) != weights[e] {
            return Err(Error::Internal("extracted allocation disagrees with its weights".into()));
        }
    }
    lift_allocation(ann, &annotated)
}

fn pick<'f>(
    accept: &'f (dyn Fn(&[u64]) -> bool + Sync),
) -> impl Fn(&AnnotatedInstance, &DpTables) -> Result<Option<Allocation>> + Sync + 'f {
    move |ann, tables| match tables.root_weights().iter().position(|w| accept(w)) {
        Some(idx) => witness(ann, tables, idx).map(Some),
        None => Ok(None),
    }
}

/// Compact allocation meeting `goal`, found through the annotated instances.
/// Pareto-optimal envy-freeness is delegated to the oracle.
pub fn solve_tw(
    instance: &Instance,
    spec: &CompactnessSpec,
    goal: FairnessGoal,
    options: &TwOptions,
) -> Result<Option<Allocation>> {
    if goal == FairnessGoal::EnvyFreeParetoOptimal {
        return solve_oracle(instance, spec, goal, &options.oracle_budget);
    }
    if goal == FairnessGoal::Maximin {
        let shares = mms_all_tw(instance, spec, options)?;
        return maximin_allocation_tw(instance, spec, &shares, options);
    }
    let plan = Plan::new(instance, spec, options)?;
    let n = instance.agent_count();
    let totals: Vec<u64> = (0..n).map(|i| instance.total(i)).collect();
    let found = match goal {
        FairnessGoal::Proportional => {
            let reach_ok = |c: &[Vec<usize>]| {
                let r = plan.reach_values(c);
                (0..n).all(|i| n as u64 * r[i] >= totals[i])
            };
            let accept = |w: &[u64]| (0..n).all(|i| n as u64 * w[i] >= totals[i]);
            let caps = totals.iter().map(|t| t.div_ceil(n as u64)).collect();
            plan.first(&plan.capped(Tracking::Diagonal, caps), reach_ok, false, pick(&accept))?
        }
        FairnessGoal::EnvyFreeComplete => {
            let accept = |w: &[u64]| (0..n).all(|i| (0..n).all(|j| w[i * n + j] <= w[i * n + i]));
            plan.first(&plan.dp(Tracking::Full, true, false), |_| true, true, pick(&accept))?
        }
        FairnessGoal::MaxWelfare => {
            // Full welfare means every item somebody values goes to an agent
            // valuing it most, and any such compact allocation will do.
            let m = instance.item_count();
            let best: Vec<u64> = (0..m).map(|z| (0..n).map(|i| instance.value(i, z)).max().unwrap_or(0)).collect();
            let owners: Vec<Vec<bool>> = (0..m)
                .map(|z| {
                    let mut row = vec![best[z] == 0];
                    row.extend((0..n).map(|i| instance.value(i, z) == best[z]));
                    row
                })
                .collect();
            let reach_ok = |c: &[Vec<usize>]| {
                let sets = plan.reach_sets(c);
                (0..m).all(|z| best[z] == 0 || (0..n).any(|i| owners[z][i + 1] && sets[i].contains(&z)))
            };
            let dp = DpOptions { owners: Some(owners.clone()), ..plan.dp(Tracking::Entries(Vec::new()), false, false) };
            plan.first(&dp, reach_ok, false, pick(&|_: &[u64]| true))?
        }
        FairnessGoal::Maximin | FairnessGoal::EnvyFreeParetoOptimal => unreachable!(),
    };
    if let Some(a) = &found {
        let ok = is_compact_allocation(instance, a, spec)
            && match goal {
                FairnessGoal::Proportional => is_proportional(instance, a),
                FairnessGoal::EnvyFreeComplete => is_envy_free(instance, a) && is_complete(instance, a),
                FairnessGoal::MaxWelfare => {
                    crate::fairness::utilitarian_welfare(instance, a) == max_unconstrained_welfare(instance)
                }
                FairnessGoal::Maximin | FairnessGoal::EnvyFreeParetoOptimal => unreachable!(),
            };
        if !ok {
            return Err(Error::Internal("lifted allocation fails the goal".into()));
        }
    }
    Ok(found)
}

/// Compact allocation giving every agent at least `shares[i]`; with the
/// maximin shares this is the maximin goal of [`solve_tw`].
pub fn maximin_allocation_tw(
    instance: &Instance,
    spec: &CompactnessSpec,
    shares: &[u64],
    options: &TwOptions,
) -> Result<Option<Allocation>> {
    let n = instance.agent_count();
    if shares.len() != n {
        return Err(Error::Unsupported(format!("{} shares given for {n} agents", shares.len())));
    }
    let plan = Plan::new(instance, spec, options)?;
    let reach_ok = |c: &[Vec<usize>]| {
        let r = plan.reach_values(c);
        (0..n).all(|i| r[i] >= shares[i])
    };
    let accept = |w: &[u64]| (0..n).all(|i| w[i] >= shares[i]);
    let found = plan.first(&plan.capped(Tracking::Diagonal, shares.to_vec()), reach_ok, false, pick(&accept))?;
    if let Some(a) = &found {
        if !is_compact_allocation(instance, a, spec) || !meets_shares(instance, a, shares) {
            return Err(Error::Internal("lifted allocation misses a share".into()));
        }
    }
    Ok(found)
}

/// Maximin share of `agent`: the largest `min_q v_agent(π(q))` over the
/// reachable root states of all annotated instances.
pub fn mms_tw(instance: &Instance, spec: &CompactnessSpec, agent: usize, options: &TwOptions) -> Result<u64> {
    if agent >= instance.agent_count() {
        return Err(Error::AgentOutOfRange { agent, len: instance.agent_count() });
    }
    let plan = Plan::new(instance, spec, options)?;
    // Every bundle is valued by `agent`, so agents are interchangeable and
    // tuples with unsorted center sets repeat a sorted one.
    let tuples = plan
        .tuples
        .iter()
        .filter(|c| c.windows(2).all(|p| p[0] <= p[1]))
        .map(|c| {
            let bound = plan.reach_sets(c).iter().map(|near| instance.bundle_value(agent, near)).min().unwrap_or(0);
            (bound, c)
        })
        .collect();
    let best = plan.max_over(&plan.dp(Tracking::Row(agent), false, true), tuples, |tables| {
        tables.root_weights().iter().map(|w| w.iter().copied().min().unwrap_or(0)).max()
    })?;
    Ok(best.unwrap_or(0))
}

pub fn mms_all_tw(instance: &Instance, spec: &CompactnessSpec, options: &TwOptions) -> Result<Vec<u64>> {
    (0..instance.agent_count()).map(|p| mms_tw(instance, spec, p, options)).collect()
}

/// Largest utilitarian welfare of a compact allocation.
pub fn max_welfare_tw(instance: &Instance, spec: &CompactnessSpec, options: &TwOptions) -> Result<u64> {
    let plan = Plan::new(instance, spec, options)?;
    let n = instance.agent_count();
    let tuples = plan
        .tuples
        .iter()
        .map(|c| {
            let sets = plan.reach_sets(c);
            let bound = (0..instance.item_count())
                .map(|z| (0..n).filter(|&i| sets[i].contains(&z)).map(|i| instance.value(i, z)).max().unwrap_or(0))
                .sum();
            (bound, c)
        })
        .collect();
    let best = plan.max_over(&plan.dp(Tracking::Welfare, false, true), tuples, |tables| {
        tables.root_weights().iter().map(|w| w[0]).max()
    })?;
    Ok(best.unwrap_or(0))
}
