//! Vertex connectivity via unit-capacity max-flow on the split-node graph.

use std::collections::VecDeque;

use super::Topology;

/// Maximum number of internally vertex-disjoint directed paths `s → t`.
/// A direct edge counts as one path.
pub fn vertex_disjoint_paths(topo: &Topology, s: usize, t: usize) -> usize {
    max_flow(topo, s, t, usize::MAX)
}

/// Minimum of [`vertex_disjoint_paths`] over all ordered pairs; 0 for
/// graphs with fewer than two nodes.
pub fn node_connectivity(topo: &Topology) -> usize {
    let n = topo.node_count();
    if n < 2 {
        return 0;
    }
    let mut best = n - 1;
    for s in 0..n {
        for t in 0..n {
            if s == t {
                continue;
            }
            best = best.min(max_flow(topo, s, t, best));
            if best == 0 {
                return 0;
            }
        }
    }
    best
}

/// Edmonds–Karp on a dense residual matrix. Node `v` splits into `2v`
/// (in) and `2v + 1` (out) joined by capacity 1, except at the endpoints.
/// Stops early once `limit` units are routed.
fn max_flow(topo: &Topology, s: usize, t: usize, limit: usize) -> usize {
    let n = topo.node_count();
    let size = 2 * n;
    let big = n as i32;
    let mut cap = vec![0i32; size * size];
    for v in 0..n {
        let c = if v == s || v == t { big } else { 1 };
        cap[(2 * v) * size + 2 * v + 1] = c;
    }
    for (src, dst) in topo.edges() {
        cap[(2 * src + 1) * size + 2 * dst] = 1;
    }
    let (source, sink) = (2 * s + 1, 2 * t);
    let mut flow = 0;
    let mut parent = vec![usize::MAX; size];
    while flow < limit {
        parent.fill(usize::MAX);
        parent[source] = source;
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            if u == sink {
                break;
            }
            for v in 0..size {
                if parent[v] == usize::MAX && cap[u * size + v] > 0 {
                    parent[v] = u;
                    queue.push_back(v);
                }
            }
        }
        if parent[sink] == usize::MAX {
            break;
        }
        let mut v = sink;
        while v != source {
            let u = parent[v];
            cap[u * size + v] -= 1;
            cap[v * size + u] += 1;
            v = u;
        }
        flow += 1;
    }
    flow
}
