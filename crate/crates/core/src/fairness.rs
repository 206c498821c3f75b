//! Fairness and efficiency predicates over allocations. All comparisons are
//! exact integer arithmetic.

use crate::model::{Allocation, Instance};

/// Every agent gets at least a `1/n` share of her total value:
/// `n · v_i(π(i)) ≥ W_i`.
pub fn is_proportional(instance: &Instance, allocation: &Allocation) -> bool {
    let n = instance.agent_count() as u64;
    (0..instance.agent_count())
        .all(|i| n * instance.bundle_value(i, allocation.bundle(i)) >= instance.total(i))
}

/// No agent values another bundle above her own.
pub fn is_envy_free(instance: &Instance, allocation: &Allocation) -> bool {
    let values = allocation.value_matrix(instance);
    values
        .iter()
        .enumerate()
        .all(|(i, row)| row.iter().all(|&other| other <= row[i]))
}

/// Every item is allocated.
pub fn is_complete(instance: &Instance, allocation: &Allocation) -> bool {
    allocation.allocated_count() == instance.item_count()
}

/// `Σ_i v_i(π(i))`.
pub fn utilitarian_welfare(instance: &Instance, allocation: &Allocation) -> u64 {
    (0..instance.agent_count())
        .map(|i| instance.bundle_value(i, allocation.bundle(i)))
        .sum()
}

/// The largest welfare of any allocation, ignoring bundle shape:
/// every item goes to an agent who values it most.
pub fn max_unconstrained_welfare(instance: &Instance) -> u64 {
    (0..instance.item_count())
        .map(|z| (0..instance.agent_count()).map(|i| instance.value(i, z)).max().unwrap_or(0))
        .sum()
}

/// Every agent gets at least her threshold: `v_i(π(i)) ≥ shares[i]`.
pub fn meets_shares(instance: &Instance, allocation: &Allocation, shares: &[u64]) -> bool {
    (0..instance.agent_count()).all(|i| instance.bundle_value(i, allocation.bundle(i)) >= shares[i])
}

/// `a` weakly dominates `b` in every coordinate and strictly in one.
pub fn dominates(a: &[u64], b: &[u64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x >= y) && a != b
}
