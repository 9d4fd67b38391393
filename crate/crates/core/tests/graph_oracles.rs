//! Topology routines against the brute-force oracles on random small graphs.

use std::collections::HashSet;

use byzest_core::topology::{
    enumerate_reduced_graphs, iabc_by_enumeration, iabc_by_partition, node_connectivity, reduced_graph_count,
    source_components, DropMode, ReducedGraph, Topology, ENUMERATION_BUDGET,
};
use byzest_core::topology::sample_reduced_graph;
use byzest_core::Error;
use byzest_oracles::{oracle_node_connectivity, oracle_reduced_graph_count, oracle_source_components};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_graph(rng: &mut ChaCha8Rng, n: usize, density: f64) -> Topology {
    let edges: Vec<(usize, usize)> = (0..n)
        .flat_map(|s| (0..n).map(move |d| (s, d)))
        .filter(|(s, d)| s != d)
        .filter(|_| rng.random_bool(density))
        .collect();
    Topology::from_edges(n, edges).unwrap()
}

fn random_fault_set(rng: &mut ChaCha8Rng, n: usize, max: usize) -> Vec<usize> {
    let k = rng.random_range(0..=max.min(n - 1));
    let mut set = sample(rng, n, k).into_vec();
    set.sort_unstable();
    set
}

#[test]
fn source_components_match_transitive_closure() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..500 {
        let n = rng.random_range(1..=8);
        let density = rng.random_range(0.05..0.6);
        let topo = random_graph(&mut rng, n, density);
        let faults = random_fault_set(&mut rng, n, 2);
        let g = ReducedGraph::induced(&topo, &faults).unwrap();
        let alive: Vec<bool> = (0..n).map(|i| !faults.contains(&i)).collect();
        let edges: Vec<(usize, usize)> = topo.edges().collect();
        assert_eq!(
            source_components(&g).source_components,
            oracle_source_components(n, &edges, &alive),
            "n={n} edges={edges:?} faults={faults:?}"
        );
    }
}

#[test]
fn connectivity_matches_minimum_vertex_cut() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..300 {
        let n = rng.random_range(1..=7);
        let density = rng.random_range(0.2..1.0);
        let topo = random_graph(&mut rng, n, density);
        let edges: Vec<(usize, usize)> = topo.edges().collect();
        assert_eq!(node_connectivity(&topo), oracle_node_connectivity(n, &edges), "edges={edges:?}");
    }
}

#[test]
fn reduced_graph_counts_match_closed_form_and_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let n = rng.random_range(2..=6);
        let b = rng.random_range(0..=2);
        let density = rng.random_range(0.2..0.9);
        let topo = random_graph(&mut rng, n, density);
        let faults = random_fault_set(&mut rng, n, b);
        let edges: Vec<(usize, usize)> = topo.edges().collect();
        let graphs: Vec<ReducedGraph> = enumerate_reduced_graphs(&topo, &faults, b).unwrap().collect();
        let distinct: HashSet<Vec<(usize, usize)>> = graphs.iter().map(|g| g.edges()).collect();
        assert_eq!(distinct.len(), graphs.len());
        assert_eq!(graphs.len() as f64, reduced_graph_count(&topo, &faults, b).unwrap());
        let oracle = oracle_reduced_graph_count(n, &edges, &faults, b, 1 << 22).unwrap();
        assert_eq!(graphs.len() as u64, oracle, "edges={edges:?} faults={faults:?} b={b}");
        assert!(graphs.iter().all(|g| g.is_valid_for(&topo, &faults, b)));
    }
}

#[test]
fn sampled_reduced_graphs_are_valid() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..300 {
        let n = rng.random_range(2..=8);
        let b = rng.random_range(0..=2);
        let topo = random_graph(&mut rng, n, 0.5);
        let faults = random_fault_set(&mut rng, n, b);
        for mode in [DropMode::UpTo, DropMode::Exactly] {
            let g = sample_reduced_graph(&topo, &faults, b, mode, &mut rng).unwrap();
            assert!(g.is_valid_for(&topo, &faults, b));
        }
    }
}

#[test]
fn achievability_routes_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut verdicts = [0usize; 2];
    for _ in 0..200 {
        let n = rng.random_range(2..=6);
        let b = rng.random_range(0..=2usize.min(n - 1));
        let density = rng.random_range(0.4..1.0);
        let topo = random_graph(&mut rng, n, density);
        let by_enum = match iabc_by_enumeration(&topo, b, ENUMERATION_BUDGET) {
            Err(Error::BudgetExceeded { .. }) => continue,
            other => other.unwrap(),
        };
        let by_partition = iabc_by_partition(&topo, b).unwrap();
        assert_eq!(by_enum, by_partition, "n={n} b={b} edges={:?}", topo.edges().collect::<Vec<_>>());
        verdicts[usize::from(by_enum)] += 1;
    }
    // Both outcomes must actually occur for the agreement to mean anything.
    assert!(verdicts[0] > 10 && verdicts[1] > 10, "{verdicts:?}");
}
