//! Treewidth dynamic program for annotated allocations and the fairness
//! drivers built on it.

mod dp;
mod driver;
mod partition;

pub use dp::{run_dp, DpOptions, DpStats, DpTables, Tracking};
pub use driver::{
    annotated_decomposition, max_welfare_tw, maximin_allocation_tw, mms_all_tw, mms_tw, solve_tw, TwOptions,
};
pub use partition::{acyclic_join_check, RootedPartition};
