//! Reduced graphs: drop every faulty node, then let each surviving node lose
//! up to `b` further incoming links (taken from the good-induced subgraph).

use rand::seq::index::sample;
use rand::Rng;

use super::Topology;
use crate::error::{Error, Result};

/// Reduced-graph machinery works on `u64` adjacency masks.
pub const MAX_REDUCED_NODES: usize = 64;

/// Exact enumeration is refused above this many reduced graphs.
pub const ENUMERATION_BUDGET: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropMode {
    /// Each node drops any number of links from 0 to `b`.
    UpTo,
    /// Each node drops exactly `min(b, indegree)` links.
    Exactly,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ReducedGraph {
    n: usize,
    surviving: u64,
    in_masks: Vec<u64>,
}

impl ReducedGraph {
    /// The good-induced subgraph with no extra links dropped.
    pub fn induced(topo: &Topology, fault_set: &[usize]) -> Result<Self> {
        let faulty = fault_mask(topo, fault_set)?;
        let n = topo.node_count();
        let surviving = full_mask(n) & !faulty;
        let in_masks = (0..n)
            .map(|i| if surviving >> i & 1 == 1 { good_in_mask(topo, i, surviving) } else { 0 })
            .collect();
        Ok(ReducedGraph { n, surviving, in_masks })
    }

    /// Node count of the original graph; ids keep their original values.
    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn contains(&self, i: usize) -> bool {
        i < self.n && self.surviving >> i & 1 == 1
    }

    pub fn surviving_nodes(&self) -> Vec<usize> {
        bits(self.surviving).collect()
    }

    pub fn surviving_mask(&self) -> u64 {
        self.surviving
    }

    pub fn in_mask(&self, i: usize) -> u64 {
        self.in_masks[i]
    }

    pub fn in_neighbors(&self, i: usize) -> impl Iterator<Item = usize> {
        bits(self.in_masks[i])
    }

    pub fn has_edge(&self, src: usize, dst: usize) -> bool {
        self.in_masks[dst] >> src & 1 == 1
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        (0..self.n)
            .flat_map(|dst| bits(self.in_masks[dst]).map(move |src| (src, dst)))
            .collect()
    }

    /// Checks the defining properties against the graph it came from: no
    /// faulty node or incident edge survives, every edge is an original good
    /// edge, and no node lost more than `b` incoming good links.
    pub fn is_valid_for(&self, topo: &Topology, fault_set: &[usize], b: usize) -> bool {
        let Ok(faulty) = fault_mask(topo, fault_set) else { return false };
        if self.n != topo.node_count() || self.surviving != full_mask(self.n) & !faulty {
            return false;
        }
        (0..self.n).all(|i| {
            let mask = self.in_masks[i];
            if !self.contains(i) {
                return mask == 0;
            }
            let induced = good_in_mask(topo, i, self.surviving);
            mask & !induced == 0 && (induced & !mask).count_ones() as usize <= b
        })
    }
}

/// Lazily enumerates reduced graphs as an odometer over per-node choices.
pub struct ReducedGraphs {
    n: usize,
    surviving: u64,
    base: Vec<u64>,
    nodes: Vec<usize>,
    choices: Vec<Vec<u64>>,
    counters: Vec<usize>,
    total: f64,
    done: bool,
}

impl ReducedGraphs {
    /// Total number of graphs this iterator yields (ξ).
    pub fn total(&self) -> f64 {
        self.total
    }
}

impl Iterator for ReducedGraphs {
    type Item = ReducedGraph;

    fn next(&mut self) -> Option<ReducedGraph> {
        if self.done {
            return None;
        }
        let mut in_masks = self.base.clone();
        for (slot, &node) in self.nodes.iter().enumerate() {
            in_masks[node] = self.choices[slot][self.counters[slot]];
        }
        let item = ReducedGraph { n: self.n, surviving: self.surviving, in_masks };
        // Advance the odometer.
        let mut slot = 0;
        loop {
            if slot == self.counters.len() {
                self.done = true;
                break;
            }
            self.counters[slot] += 1;
            if self.counters[slot] < self.choices[slot].len() {
                break;
            }
            self.counters[slot] = 0;
            slot += 1;
        }
        Some(item)
    }
}

/// Every reduced graph for `fault_set`, each exactly once.
pub fn enumerate_reduced_graphs(topo: &Topology, fault_set: &[usize], b: usize) -> Result<ReducedGraphs> {
    enumerate_reduced_graphs_with_budget(topo, fault_set, b, DropMode::UpTo, ENUMERATION_BUDGET)
}

/// Only the reduced graphs in which every node drops as many links as it
/// may. Removing edges never reduces the number of source components, so
/// these are the only candidates for a multi-source counterexample.
pub fn maximal_reduced_graphs(topo: &Topology, fault_set: &[usize], b: usize) -> Result<ReducedGraphs> {
    enumerate_reduced_graphs_with_budget(topo, fault_set, b, DropMode::Exactly, ENUMERATION_BUDGET)
}

pub fn enumerate_reduced_graphs_with_budget(
    topo: &Topology,
    fault_set: &[usize],
    b: usize,
    mode: DropMode,
    budget: u64,
) -> Result<ReducedGraphs> {
    check_fault_set(fault_set, b)?;
    let total = reduced_graph_count_with_mode(topo, fault_set, b, mode)?;
    if total > budget as f64 {
        return Err(Error::BudgetExceeded { count: total, budget });
    }
    if topo.node_count() > MAX_REDUCED_NODES {
        return Err(Error::Domain(format!(
            "reduced-graph enumeration supports at most {MAX_REDUCED_NODES} nodes"
        )));
    }
    let induced = ReducedGraph::induced(topo, fault_set)?;
    let nodes = induced.surviving_nodes();
    let choices: Vec<Vec<u64>> = nodes
        .iter()
        .map(|&i| kept_masks(induced.in_masks[i], b, mode))
        .collect();
    Ok(ReducedGraphs {
        n: induced.n,
        surviving: induced.surviving,
        base: induced.in_masks,
        counters: vec![0; nodes.len()],
        nodes,
        choices,
        total,
        done: false,
    })
}

/// ξ in closed form: `Π_i Σ_{j ≤ min(b, indeg_i)} C(indeg_i, j)` over good
/// nodes, with in-degrees taken in the good-induced subgraph. Works for any
/// graph size; exact while below 2⁵³.
pub fn reduced_graph_count(topo: &Topology, fault_set: &[usize], b: usize) -> Result<f64> {
    reduced_graph_count_with_mode(topo, fault_set, b, DropMode::UpTo)
}

pub(super) fn reduced_graph_count_exact_mode(topo: &Topology, fault_set: &[usize], b: usize) -> Result<f64> {
    reduced_graph_count_with_mode(topo, fault_set, b, DropMode::Exactly)
}

fn reduced_graph_count_with_mode(
    topo: &Topology,
    fault_set: &[usize],
    b: usize,
    mode: DropMode,
) -> Result<f64> {
    let n = topo.node_count();
    let mut faulty = vec![false; n];
    for &a in fault_set {
        if a >= n {
            return Err(Error::IndexOutOfRange { index: a, len: n });
        }
        faulty[a] = true;
    }
    let mut total = 1.0;
    for i in (0..n).filter(|&i| !faulty[i]) {
        let indeg = topo.in_neighbors(i).iter().filter(|&&j| !faulty[j]).count();
        let max_drop = b.min(indeg);
        total *= match mode {
            DropMode::UpTo => (0..=max_drop).map(|j| binomial(indeg, j)).sum::<f64>(),
            DropMode::Exactly => binomial(indeg, max_drop),
        };
    }
    Ok(total)
}

/// Draws one reduced graph: each node independently picks a drop set, uniform
/// over its admissible choices. Used when exact enumeration is over budget.
pub fn sample_reduced_graph<R: Rng + ?Sized>(
    topo: &Topology,
    fault_set: &[usize],
    b: usize,
    mode: DropMode,
    rng: &mut R,
) -> Result<ReducedGraph> {
    check_fault_set(fault_set, b)?;
    let mut g = ReducedGraph::induced(topo, fault_set)?;
    for i in g.surviving_nodes() {
        let ins: Vec<usize> = bits(g.in_masks[i]).collect();
        let max_drop = b.min(ins.len());
        let drop = match mode {
            DropMode::Exactly => max_drop,
            DropMode::UpTo => {
                let weights: Vec<f64> = (0..=max_drop).map(|j| binomial(ins.len(), j)).collect();
                let mut pick = rng.random::<f64>() * weights.iter().sum::<f64>();
                let mut chosen = max_drop;
                for (j, w) in weights.iter().enumerate() {
                    if pick < *w {
                        chosen = j;
                        break;
                    }
                    pick -= w;
                }
                chosen
            }
        };
        for idx in sample(rng, ins.len(), drop) {
            g.in_masks[i] &= !(1u64 << ins[idx]);
        }
    }
    Ok(g)
}

fn check_fault_set(fault_set: &[usize], b: usize) -> Result<()> {
    if fault_set.len() > b {
        return Err(Error::FaultBudgetExceeded { faulty: fault_set.len(), b });
    }
    Ok(())
}

pub(super) fn fault_mask(topo: &Topology, fault_set: &[usize]) -> Result<u64> {
    let n = topo.node_count();
    if n > MAX_REDUCED_NODES {
        return Err(Error::Domain(format!(
            "reduced-graph machinery supports at most {MAX_REDUCED_NODES} nodes, got {n}"
        )));
    }
    let mut mask = 0u64;
    for &a in fault_set {
        if a >= n {
            return Err(Error::IndexOutOfRange { index: a, len: n });
        }
        mask |= 1 << a;
    }
    Ok(mask)
}

pub(super) fn full_mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

fn good_in_mask(topo: &Topology, i: usize, surviving: u64) -> u64 {
    topo.in_neighbors(i).iter().fold(0u64, |m, &j| m | (1 << j)) & surviving
}

pub(super) fn bits(mut mask: u64) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if mask == 0 {
            None
        } else {
            let i = mask.trailing_zeros() as usize;
            mask &= mask - 1;
            Some(i)
        }
    })
}

/// All masks obtained from `full` by clearing an admissible number of bits.
fn kept_masks(full: u64, b: usize, mode: DropMode) -> Vec<u64> {
    let members: Vec<u64> = bits(full).map(|i| 1u64 << i).collect();
    let max_drop = b.min(members.len());
    let min_drop = match mode {
        DropMode::UpTo => 0,
        DropMode::Exactly => max_drop,
    };
    let mut out = Vec::new();
    fn rec(members: &[u64], start: usize, left: usize, current: u64, out: &mut Vec<u64>) {
        if left == 0 {
            out.push(current);
            return;
        }
        for idx in start..members.len() {
            rec(members, idx + 1, left - 1, current & !members[idx], out);
        }
    }
    for drop in min_drop..=max_drop {
        rec(&members, 0, drop, full, &mut out);
    }
    out
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64).round()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn examples_from_definition() {
        let k3 = Topology::complete(3);
        assert_eq!(enumerate_reduced_graphs(&k3, &[], 0).unwrap().count(), 1);

        let two_cycle = Topology::undirected(2, [(0, 1)]).unwrap();
        let all: Vec<_> = enumerate_reduced_graphs(&two_cycle, &[], 1).unwrap().collect();
        assert_eq!(all.len(), 4);
        assert_eq!(all.iter().collect::<HashSet<_>>().len(), 4);

        let k4 = Topology::complete(4);
        let graphs = enumerate_reduced_graphs(&k4, &[3], 1).unwrap();
        assert_eq!(graphs.total(), 27.0);
        let all: Vec<_> = graphs.collect();
        assert_eq!(all.len(), 27);
        assert_eq!(all.iter().collect::<HashSet<_>>().len(), 27);
        assert!(all.iter().all(|g| g.is_valid_for(&k4, &[3], 1)));
        assert!(all.iter().all(|g| !g.contains(3)));
    }

    #[test]
    fn maximal_mode_drops_exactly() {
        let k4 = Topology::complete(4);
        let all: Vec<_> = maximal_reduced_graphs(&k4, &[], 1).unwrap().collect();
        assert_eq!(all.len(), 3usize.pow(4));
        for g in &all {
            for i in 0..4 {
                assert_eq!(g.in_neighbors(i).count(), 2);
            }
        }
    }

    #[test]
    fn budget_is_enforced() {
        let k10 = Topology::complete(10);
        assert!(matches!(
            enumerate_reduced_graphs(&k10, &[], 2),
            Err(Error::BudgetExceeded { .. })
        ));
        assert!(matches!(
            enumerate_reduced_graphs(&k10, &[0, 1, 2], 2),
            Err(Error::FaultBudgetExceeded { faulty: 3, b: 2 })
        ));
        // Closed form still works where enumeration does not.
        assert_eq!(reduced_graph_count(&k10, &[], 2).unwrap(), 46f64.powi(10));
    }

    #[test]
    fn sampled_graphs_are_valid() {
        use crate::rng::{SeedTree, Stream};
        let mut rng = SeedTree::new(5).stream(Stream::Aux(1));
        let k7 = Topology::complete(7);
        for mode in [DropMode::UpTo, DropMode::Exactly] {
            for _ in 0..200 {
                let g = sample_reduced_graph(&k7, &[6], 2, mode, &mut rng).unwrap();
                assert!(g.is_valid_for(&k7, &[6], 2));
            }
        }
    }

    #[test]
    fn invalid_graph_detected() {
        let k3 = Topology::complete(3);
        let g = ReducedGraph::induced(&k3, &[]).unwrap();
        assert!(g.is_valid_for(&k3, &[], 0));
        assert!(!g.is_valid_for(&k3, &[0], 1));
        let mut bad = g.clone();
        bad.in_masks[0] = 0;
        assert!(!bad.is_valid_for(&k3, &[], 1));
        assert!(bad.is_valid_for(&k3, &[], 2));
    }
}
