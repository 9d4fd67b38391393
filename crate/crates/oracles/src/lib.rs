//! Brute-force reference implementations for the test suites.
//!
//! Nothing here depends on `byzest-core`: inputs are plain slices and edge
//! lists, and every routine takes the slowest obvious route.

use std::collections::HashSet;

/// Sort a copy, slice `[b, len - b)`, average.
pub fn oracle_trimmed_mean(values: &[f64], b: usize) -> Option<f64> {
    if values.len() < 2 * b + 1 {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, c| a.partial_cmp(c).expect("finite values"));
    let kept = &sorted[b..sorted.len() - b];
    let mut total = 0.0;
    for v in kept {
        total += v;
    }
    Some(total / kept.len() as f64)
}

/// Counts distinct reduced graphs by materialising every combination of
/// per-node kept in-link sets and deduplicating the resulting edge sets.
/// Returns `None` above `cap` combinations.
pub fn oracle_reduced_graph_count(
    n: usize,
    edges: &[(usize, usize)],
    fault_set: &[usize],
    b: usize,
    cap: u64,
) -> Option<u64> {
    let faulty: Vec<bool> = (0..n).map(|i| fault_set.contains(&i)).collect();
    let mut per_node: Vec<Vec<Vec<(usize, usize)>>> = Vec::new();
    for i in (0..n).filter(|&i| !faulty[i]) {
        let mut ins: Vec<usize> = edges
            .iter()
            .filter(|&&(s, d)| d == i && s != i && !faulty[s])
            .map(|&(s, _)| s)
            .collect();
        ins.sort();
        ins.dedup();
        let mut options = Vec::new();
        for subset in 0u32..(1 << ins.len()) {
            let kept: Vec<(usize, usize)> = (0..ins.len())
                .filter(|&bit| subset >> bit & 1 == 1)
                .map(|bit| (ins[bit], i))
                .collect();
            if ins.len() - kept.len() <= b {
                options.push(kept);
            }
        }
        per_node.push(options);
    }
    let total: f64 = per_node.iter().map(|o| o.len() as f64).product();
    if total > cap as f64 {
        return None;
    }
    let mut seen: HashSet<Vec<(usize, usize)>> = HashSet::new();
    let mut idx = vec![0usize; per_node.len()];
    loop {
        let mut edge_set: Vec<(usize, usize)> = Vec::new();
        for (node, &choice) in idx.iter().enumerate() {
            edge_set.extend(per_node[node][choice].iter().copied());
        }
        edge_set.sort();
        seen.insert(edge_set);
        let mut pos = 0;
        loop {
            if pos == idx.len() {
                return Some(seen.len() as u64);
            }
            idx[pos] += 1;
            if idx[pos] < per_node[pos].len() {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

/// `(1/t) Σ_s Hᵀ(Hx − y_s)` from the complete measurement history.
pub fn oracle_gradient_full_history(h: &[Vec<f64>], ys: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    let d = x.len();
    let mut grad = vec![0.0; d];
    for y in ys {
        for (r, row) in h.iter().enumerate() {
            let mut hx = 0.0;
            for c in 0..d {
                hx += row[c] * x[c];
            }
            let resid = hx - y[r];
            for c in 0..d {
                grad[c] += row[c] * resid;
            }
        }
    }
    for g in &mut grad {
        *g /= ys.len() as f64;
    }
    grad
}

/// `f(x) = (1/t) Σ_s ½‖Hx − y_s‖²`, for finite-difference checks.
pub fn oracle_empirical_loss(h: &[Vec<f64>], ys: &[Vec<f64>], x: &[f64]) -> f64 {
    let mut total = 0.0;
    for y in ys {
        for (r, row) in h.iter().enumerate() {
            let hx: f64 = row.iter().zip(x).map(|(a, b)| a * b).sum();
            total += 0.5 * (hx - y[r]).powi(2);
        }
    }
    total / ys.len() as f64
}

/// `Σ_{m=0}^{t-1} λ^m ‖(1/(t−m)) Σ_{r=1}^{t−m} w(r)‖` straight from raw noise.
pub fn oracle_cumulative_noise(noise: &[Vec<f64>], lambda: f64) -> f64 {
    let t = noise.len();
    let mut total = 0.0;
    for m in 0..t {
        let upto = t - m;
        let dim = noise[0].len();
        let mut sum = vec![0.0; dim];
        for w in &noise[..upto] {
            for (s, v) in sum.iter_mut().zip(w) {
                *s += v;
            }
        }
        let norm = sum.iter().map(|s| (s / upto as f64).powi(2)).sum::<f64>().sqrt();
        total += lambda.powi(m as i32) * norm;
    }
    total
}

fn reachability(n: usize, edges: &[(usize, usize)], alive: &[bool]) -> Vec<Vec<bool>> {
    let mut reach = vec![vec![false; n]; n];
    for i in 0..n {
        reach[i][i] = alive[i];
    }
    for &(s, d) in edges {
        if alive[s] && alive[d] {
            reach[s][d] = true;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if reach[i][k] && reach[k][j] {
                    reach[i][j] = true;
                }
            }
        }
    }
    reach
}

/// Source components by transitive closure: classes of mutually reachable
/// nodes with no incoming edge from another class. Sorted, ordered by
/// smallest member.
pub fn oracle_source_components(n: usize, edges: &[(usize, usize)], alive: &[bool]) -> Vec<Vec<usize>> {
    let reach = reachability(n, edges, alive);
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for i in (0..n).filter(|&i| alive[i]) {
        if classes.iter().any(|c| c.contains(&i)) {
            continue;
        }
        classes.push((0..n).filter(|&j| alive[j] && reach[i][j] && reach[j][i]).collect());
    }
    classes
        .into_iter()
        .filter(|c| {
            !edges
                .iter()
                .any(|&(s, d)| alive[s] && c.contains(&d) && !c.contains(&s))
        })
        .collect()
}

/// Smallest vertex set whose removal leaves a graph that is not strongly
/// connected (or a single vertex), by trying every subset.
pub fn oracle_node_connectivity(n: usize, edges: &[(usize, usize)]) -> usize {
    if n < 2 {
        return 0;
    }
    let mut best = n - 1;
    for removed in 0u32..(1 << n) {
        let size = removed.count_ones() as usize;
        if size >= best || n - size < 2 {
            continue;
        }
        let alive: Vec<bool> = (0..n).map(|i| removed >> i & 1 == 0).collect();
        let reach = reachability(n, edges, &alive);
        let strongly = (0..n)
            .filter(|&i| alive[i])
            .all(|i| (0..n).filter(|&j| alive[j]).all(|j| reach[i][j]));
        if !strongly {
            best = size;
        }
    }
    best
}
