//! Is iterative approximate Byzantine consensus achievable on a graph?
//!
//! Two independent routes decide it:
//!
//! * enumeration: every reduced graph of every fault set `|A| ≤ b` has a
//!   single source component. Removing edges never merges source
//!   components, so only the maximal reduced graphs (each node dropping
//!   `min(b, indeg)` links) need to be checked;
//! * partition: for every partition `F, L, C, R` of the nodes with
//!   `|F| ≤ b` and `L, R` non-empty, either `C ∪ R ⇒ L` or `L ∪ C ⇒ R`,
//!   where `X ⇒ Y` means some node of `Y` has at least `b + 1` incoming
//!   links from `X`.
//!
//! The partition route is exponential in the node count only (`4ⁿ`), so it
//! takes over when the reduced-graph count blows the enumeration budget.

use std::collections::BTreeMap;

use super::reduced::{
    bits, enumerate_reduced_graphs_with_budget, fault_mask, full_mask, maximal_reduced_graphs, reduced_graph_count,
    reduced_graph_count_exact_mode, DropMode,
};
use super::scc::{has_single_source, source_components};
use super::Topology;
use crate::error::{Error, Result};
use crate::topology::ENUMERATION_BUDGET;

/// Largest graph the partition route will attempt.
pub const PARTITION_MAX_NODES: usize = 13;

pub fn check_iabc_achievable(topo: &Topology, b: usize) -> Result<bool> {
    match iabc_by_enumeration(topo, b, ENUMERATION_BUDGET) {
        Err(Error::BudgetExceeded { .. }) if topo.node_count() <= PARTITION_MAX_NODES => {
            iabc_by_partition(topo, b)
        }
        other => other,
    }
}

pub fn iabc_by_enumeration(topo: &Topology, b: usize, budget: u64) -> Result<bool> {
    let n = topo.node_count();
    check_b(n, b)?;
    let fault_sets = fault_sets_up_to(n, b);
    let mut total = 0.0;
    for set in &fault_sets {
        total += reduced_graph_count_exact_mode(topo, set, b)?;
        if total > budget as f64 {
            return Err(Error::BudgetExceeded { count: total, budget });
        }
    }
    for set in &fault_sets {
        for g in maximal_reduced_graphs(topo, set, b)? {
            if !has_single_source(&g) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

pub fn iabc_by_partition(topo: &Topology, b: usize) -> Result<bool> {
    let n = topo.node_count();
    check_b(n, b)?;
    if n > PARTITION_MAX_NODES {
        return Err(Error::BudgetExceeded {
            count: 4f64.powi(n as i32),
            budget: 4u64.pow(PARTITION_MAX_NODES as u32),
        });
    }
    fault_mask(topo, &[])?;
    let in_masks: Vec<u64> = (0..n)
        .map(|i| topo.in_neighbors(i).iter().fold(0u64, |m, &j| m | 1 << j))
        .collect();
    let implies = |from: u64, to: u64| {
        bits(to).any(|i| (in_masks[i] & from).count_ones() as usize > b)
    };

    let all = full_mask(n);
    for f in 0..=all {
        if f & !all != 0 || f.count_ones() as usize > b {
            continue;
        }
        let rest: Vec<usize> = bits(all & !f).collect();
        let m = rest.len();
        // Base-3 counter over L (0), C (1), R (2).
        let mut digits = vec![0u8; m];
        loop {
            let (mut l, mut c, mut r) = (0u64, 0u64, 0u64);
            for (idx, &node) in rest.iter().enumerate() {
                match digits[idx] {
                    0 => l |= 1 << node,
                    1 => c |= 1 << node,
                    _ => r |= 1 << node,
                }
            }
            if l != 0 && r != 0 && !implies(c | r, l) && !implies(l | c, r) {
                return Ok(false);
            }
            let mut idx = 0;
            while idx < m && digits[idx] == 2 {
                digits[idx] = 0;
                idx += 1;
            }
            if idx == m {
                break;
            }
            digits[idx] += 1;
        }
    }
    Ok(true)
}

fn check_b(n: usize, b: usize) -> Result<()> {
    if b >= n {
        return Err(Error::Domain(format!("fault budget b = {b} must be below n = {n}")));
    }
    Ok(())
}

/// Every fault set of size at most `b` over `n` nodes, the empty set first.
pub fn fault_sets_up_to(n: usize, b: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    fn rec(n: usize, start: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left == 0 {
            return;
        }
        for i in start..n {
            cur.push(i);
            out.push(cur.clone());
            rec(n, i + 1, left - 1, cur, out);
            cur.pop();
        }
    }
    rec(n, 0, b, &mut Vec::new(), &mut out);
    out
}

/// Histogram of source-component counts over every reduced graph of every
/// fault set of size at most `b`. Errors once the total exceeds `budget`.
pub fn source_component_census(topo: &Topology, b: usize, budget: u64) -> Result<BTreeMap<usize, u64>> {
    check_b(topo.node_count(), b)?;
    let fault_sets = fault_sets_up_to(topo.node_count(), b);
    let mut total = 0.0;
    for set in &fault_sets {
        total += reduced_graph_count(topo, set, b)?;
        if total > budget as f64 {
            return Err(Error::BudgetExceeded { count: total, budget });
        }
    }
    let mut census = BTreeMap::new();
    for set in &fault_sets {
        for g in enumerate_reduced_graphs_with_budget(topo, set, b, DropMode::UpTo, budget)? {
            *census.entry(source_components(&g).source_components.len()).or_insert(0) += 1;
        }
    }
    Ok(census)
}
