//! Strongly connected components and source components of reduced graphs.

use super::reduced::{bits, ReducedGraph};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceComponentReport {
    /// All SCCs, each sorted, ordered by smallest member.
    pub components: Vec<Vec<usize>>,
    /// The SCCs with no incoming edge from outside themselves, same order.
    pub source_components: Vec<Vec<usize>>,
}

impl SourceComponentReport {
    pub fn unique_source(&self) -> Option<&[usize]> {
        match self.source_components.as_slice() {
            [only] => Some(only),
            _ => None,
        }
    }
}

/// Tarjan's algorithm over the surviving nodes, iteratively.
pub fn strongly_connected_components(g: &ReducedGraph) -> Vec<Vec<usize>> {
    let n = g.node_count();
    let mut out = vec![0u64; n];
    for (src, dst) in g.edges() {
        out[src] |= 1 << dst;
    }

    const UNSEEN: usize = usize::MAX;
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut next_index = 0;
    let mut components = Vec::new();

    for root in g.surviving_nodes() {
        if index[root] != UNSEEN {
            continue;
        }
        // (node, remaining successors)
        let mut call: Vec<(usize, u64)> = vec![(root, out[root])];
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(&mut (v, ref mut rest)) = call.last_mut() {
            if *rest != 0 {
                let w = rest.trailing_zeros() as usize;
                *rest &= *rest - 1;
                if index[w] == UNSEEN {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, out[w]));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            call.pop();
            if let Some(&(parent, _)) = call.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                let mut comp = Vec::new();
                loop {
                    let w = stack.pop().expect("tarjan stack");
                    on_stack[w] = false;
                    comp.push(w);
                    if w == v {
                        break;
                    }
                }
                comp.sort_unstable();
                components.push(comp);
            }
        }
    }
    components.sort_by_key(|c| c[0]);
    components
}

pub fn source_components(g: &ReducedGraph) -> SourceComponentReport {
    let components = strongly_connected_components(g);
    let source_components = components
        .iter()
        .filter(|comp| {
            let inside = comp.iter().fold(0u64, |m, &i| m | 1 << i);
            comp.iter().all(|&i| g.in_mask(i) & !inside == 0)
        })
        .cloned()
        .collect();
    SourceComponentReport { components, source_components }
}

/// A graph has exactly one source component iff some node reaches every
/// surviving node. Cheaper than building the components.
pub(super) fn has_single_source(g: &ReducedGraph) -> bool {
    let nodes: Vec<usize> = g.surviving_nodes();
    if nodes.is_empty() {
        return false;
    }
    let all = g.surviving_mask();
    let n = g.node_count();
    let mut out = vec![0u64; n];
    for &dst in &nodes {
        for src in bits(g.in_mask(dst)) {
            out[src] |= 1 << dst;
        }
    }
    nodes.iter().any(|&root| {
        let mut seen = 1u64 << root;
        let mut frontier = seen;
        while frontier != 0 {
            let mut next = 0u64;
            for v in bits(frontier) {
                next |= out[v];
            }
            frontier = next & !seen;
            seen |= next;
        }
        seen == all
    })
}
