//! One entry point over all solvers, with automatic method selection.

use std::fmt;
use std::str::FromStr;

use crate::enumerate::{mms_enum, solve_enum, EnumBudget};
use crate::error::{Error, Result};
use crate::matching::{mms_10, solve_ef_one_item, solve_mms_10, solve_prop_10};
use crate::model::{Allocation, CompactnessSpec, FairnessGoal, Instance};
use crate::oracle::{assignment_count, mms_oracle, solve_oracle, OracleBudget};
use crate::path_dp::{solve_prop_path_agents, solve_prop_path_types, PathInstance};
use crate::tw_dp::{mms_tw, solve_tw, TwOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    Auto,
    Oracle,
    Enum,
    Matching,
    PathDp,
    TwDp,
}

impl Method {
    pub const ALL: [Method; 6] =
        [Method::Auto, Method::Oracle, Method::Enum, Method::Matching, Method::PathDp, Method::TwDp];

    pub fn cli_name(self) -> &'static str {
        match self {
            Method::Auto => "auto",
            Method::Oracle => "oracle",
            Method::Enum => "enum",
            Method::Matching => "matching",
            Method::PathDp => "path-dp",
            Method::TwDp => "tw-dp",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.cli_name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.cli_name() == s)
            .ok_or_else(|| Error::InvalidSpec(format!("unknown method `{s}`")))
    }
}

/// `auto` hands instances with at most this many item assignments to the
/// oracle.
pub const TINY_ASSIGNMENTS: u64 = 4096;

#[derive(Clone, Debug, Default)]
pub struct SolveOptions {
    pub oracle_budget: OracleBudget,
    pub enum_budget: EnumBudget,
    pub tw: TwOptions,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Solution {
    pub method: Method,
    pub allocation: Option<Allocation>,
}

/// Every bundle is a single item (or empty): `(1, 0)` in either flavour.
fn single_items(spec: &CompactnessSpec) -> bool {
    spec.alpha == 1 && spec.beta == 0
}

fn matching_supports(instance: &Instance, goal: FairnessGoal) -> bool {
    match goal {
        FairnessGoal::Proportional | FairnessGoal::Maximin => true,
        // Complete single-item allocations give every agent an item only
        // when m = n; with m > n none exist.
        FairnessGoal::EnvyFreeComplete => instance.item_count() >= instance.agent_count(),
        _ => false,
    }
}

/// The method `auto` picks: matching for single-item bundles, the path DP
/// for proportionality on paths with `α = 1`, the oracle for tiny inputs,
/// then the treewidth DP (or enumeration for strong compactness).
pub fn auto_method(instance: &Instance, spec: &CompactnessSpec, goal: FairnessGoal) -> Method {
    if single_items(spec) && matching_supports(instance, goal) {
        Method::Matching
    } else if spec.alpha == 1 && goal == FairnessGoal::Proportional && instance.graph().path_order().is_some() {
        Method::PathDp
    } else if assignment_count(instance) <= TINY_ASSIGNMENTS {
        Method::Oracle
    } else if spec.strong {
        Method::Enum
    } else {
        Method::TwDp
    }
}

fn unsupported(method: Method, what: &str) -> Error {
    Error::Unsupported(format!("method {method} does not handle {what}"))
}

/// Decides whether a compact allocation meeting `goal` exists and returns
/// one.
pub fn solve(
    instance: &Instance,
    spec: &CompactnessSpec,
    goal: FairnessGoal,
    method: Method,
    options: &SolveOptions,
) -> Result<Solution> {
    let method = if method == Method::Auto { auto_method(instance, spec, goal) } else { method };
    let allocation = match method {
        Method::Auto => unreachable!(),
        Method::Oracle => solve_oracle(instance, spec, goal, &options.oracle_budget)?,
        Method::Enum => solve_enum(instance, spec, goal, &options.enum_budget)?,
        Method::TwDp => solve_tw(instance, spec, goal, &options.tw)?,
        Method::Matching => {
            if !single_items(spec) {
                return Err(unsupported(method, &format!("compactness {spec}")));
            }
            match goal {
                FairnessGoal::Proportional => solve_prop_10(instance),
                FairnessGoal::Maximin => solve_mms_10(instance),
                FairnessGoal::EnvyFreeComplete if instance.item_count() > instance.agent_count() => None,
                FairnessGoal::EnvyFreeComplete if instance.item_count() == instance.agent_count() => {
                    solve_ef_one_item(instance)
                }
                _ => return Err(unsupported(method, &format!("goal {goal} on this instance"))),
            }
        }
        Method::PathDp => {
            if spec.alpha != 1 || goal != FairnessGoal::Proportional {
                return Err(unsupported(method, "anything but proportionality with α = 1"));
            }
            let path = PathInstance::from_instance(instance)?;
            if path.types().type_count() < instance.agent_count() {
                solve_prop_path_types(&path, spec.beta, spec.strong)
            } else {
                solve_prop_path_agents(&path, spec.beta, spec.strong)
            }
        }
    };
    Ok(Solution { method, allocation })
}

/// Maximin share of `agent` within the compact allocations.
pub fn maximin_share(
    instance: &Instance,
    spec: &CompactnessSpec,
    agent: usize,
    method: Method,
    options: &SolveOptions,
) -> Result<(Method, u64)> {
    if agent >= instance.agent_count() {
        return Err(Error::AgentOutOfRange { agent, len: instance.agent_count() });
    }
    let method = match method {
        Method::Auto if single_items(spec) => Method::Matching,
        Method::Auto if assignment_count(instance) <= TINY_ASSIGNMENTS => Method::Oracle,
        Method::Auto if spec.strong => Method::Enum,
        Method::Auto => Method::TwDp,
        m => m,
    };
    let share = match method {
        Method::Oracle => mms_oracle(instance, spec, agent, &options.oracle_budget)?,
        Method::Enum => mms_enum(instance, spec, agent, &options.enum_budget)?,
        Method::TwDp => mms_tw(instance, spec, agent, &options.tw)?,
        Method::Matching if single_items(spec) => mms_10(instance, agent),
        Method::Matching => return Err(unsupported(method, &format!("compactness {spec}"))),
        Method::PathDp => return Err(unsupported(method, "maximin shares")),
        Method::Auto => unreachable!(),
    };
    Ok((method, share))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.cli_name().parse::<Method>().unwrap(), m);
        }
        assert!("dp".parse::<Method>().is_err());
    }

    #[test]
    fn auto_dispatch() {
        let path = Instance::new(Graph::path(9), vec![vec![1; 9]; 3]).unwrap();
        let prop = FairnessGoal::Proportional;
        assert_eq!(auto_method(&path, &CompactnessSpec::compact(1, 0), prop), Method::Matching);
        assert_eq!(auto_method(&path, &CompactnessSpec::compact(1, 2), prop), Method::PathDp);
        assert_eq!(auto_method(&path, &CompactnessSpec::compact(2, 2), prop), Method::TwDp);
        assert_eq!(auto_method(&path, &CompactnessSpec::strong(2, 2), prop), Method::Enum);
        let tiny = Instance::new(Graph::cycle(4), vec![vec![1; 4]; 2]).unwrap();
        assert_eq!(auto_method(&tiny, &CompactnessSpec::compact(2, 1), prop), Method::Oracle);
    }

    #[test]
    fn methods_agree_on_a_small_cycle() {
        let inst = Instance::new(Graph::cycle(6), vec![vec![3, 1, 4, 1, 5, 9], vec![2, 6, 5, 3, 5, 8]]).unwrap();
        let spec = CompactnessSpec::compact(1, 1);
        let opts = SolveOptions::default();
        for goal in FairnessGoal::ALL {
            let o = solve(&inst, &spec, goal, Method::Oracle, &opts).unwrap();
            let t = solve(&inst, &spec, goal, Method::TwDp, &opts).unwrap();
            let e = solve(&inst, &spec, goal, Method::Enum, &opts).unwrap();
            assert_eq!(o.allocation.is_some(), t.allocation.is_some(), "{goal}");
            assert_eq!(o.allocation.is_some(), e.allocation.is_some(), "{goal}");
        }
        assert!(solve(&inst, &spec, FairnessGoal::Proportional, Method::PathDp, &opts).is_err());
        assert!(solve(&inst, &spec, FairnessGoal::Proportional, Method::Matching, &opts).is_err());
    }
}
