//! Directed communication graphs and the combinatorics that decide whether
//! trimmed-mean consensus can work on them.
//!
//! Edges are stored as incoming-neighbour lists: `j ∈ in_neighbors(i)` means
//! `j → i`, i.e. `i` hears from `j`. Self-loops are never stored; an agent's
//! own value is always part of its aggregation.

mod connectivity;
mod iabc;
mod reduced;
mod scc;

pub use connectivity::{node_connectivity, vertex_disjoint_paths};
pub use iabc::{
    check_iabc_achievable, fault_sets_up_to, iabc_by_enumeration, iabc_by_partition, source_component_census,
    PARTITION_MAX_NODES,
};
pub use reduced::{
    enumerate_reduced_graphs, enumerate_reduced_graphs_with_budget, maximal_reduced_graphs,
    reduced_graph_count, sample_reduced_graph, DropMode, ReducedGraph, ReducedGraphs,
    ENUMERATION_BUDGET, MAX_REDUCED_NODES,
};
pub use scc::{source_components, strongly_connected_components, SourceComponentReport};

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    n: usize,
    in_neighbors: Vec<Vec<usize>>,
    out_neighbors: Vec<Vec<usize>>,
    complete: bool,
}

impl Topology {
    /// Builds a graph from directed `(src, dst)` pairs. Duplicates collapse;
    /// self-loops and out-of-range ids are rejected.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut sets = vec![BTreeSet::new(); n];
        for (src, dst) in edges {
            for id in [src, dst] {
                if id >= n {
                    return Err(Error::IndexOutOfRange { index: id, len: n });
                }
            }
            if src == dst {
                return Err(Error::InvalidConfig(format!("self-loop on node {src}")));
            }
            sets[dst].insert(src);
        }
        let in_neighbors: Vec<Vec<usize>> = sets.into_iter().map(|s| s.into_iter().collect()).collect();
        Ok(Self::from_in_lists(in_neighbors))
    }

    /// Every pair of edges `a → b` and `b → a`.
    pub fn undirected(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let edges: Vec<_> = pairs.into_iter().flat_map(|(a, b)| [(a, b), (b, a)]).collect();
        Self::from_edges(n, edges)
    }

    pub fn complete(n: usize) -> Self {
        let in_neighbors = (0..n).map(|i| (0..n).filter(|&j| j != i).collect()).collect();
        Self::from_in_lists(in_neighbors)
    }

    fn from_in_lists(in_neighbors: Vec<Vec<usize>>) -> Self {
        let n = in_neighbors.len();
        let mut out_neighbors = vec![Vec::new(); n];
        for (dst, ins) in in_neighbors.iter().enumerate() {
            for &src in ins {
                out_neighbors[src].push(dst);
            }
        }
        let complete = in_neighbors.iter().all(|ins| ins.len() + 1 == n);
        Topology { n, in_neighbors, out_neighbors, complete }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn is_complete(&self) -> bool {
        self.complete
    }

    /// `N_i`, sorted ascending.
    pub fn in_neighbors(&self, i: usize) -> &[usize] {
        &self.in_neighbors[i]
    }

    pub fn out_neighbors(&self, i: usize) -> &[usize] {
        &self.out_neighbors[i]
    }

    pub fn has_edge(&self, src: usize, dst: usize) -> bool {
        self.in_neighbors[dst].binary_search(&src).is_ok()
    }

    pub fn edge_count(&self) -> usize {
        self.in_neighbors.iter().map(Vec::len).sum()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.in_neighbors
            .iter()
            .enumerate()
            .flat_map(|(dst, ins)| ins.iter().map(move |&src| (src, dst)))
    }

    /// Parses the edge-list format: a header `n <count>` followed by one
    /// `src dst` pair per line (0-based ids), or the single line
    /// `complete <count>`. Blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());

        let (hline, header) = lines
            .next()
            .ok_or(Error::GraphParse { line: 0, msg: "empty graph file".into() })?;
        let mut parts = header.split_whitespace();
        let keyword = parts.next().unwrap_or("");
        let count = parse_id(parts.next(), hline)?;
        if parts.next().is_some() {
            return Err(Error::GraphParse { line: hline, msg: "trailing tokens in header".into() });
        }
        match keyword {
            "complete" => {
                if let Some((line, _)) = lines.next() {
                    return Err(Error::GraphParse {
                        line,
                        msg: "no edges allowed after `complete` header".into(),
                    });
                }
                Ok(Self::complete(count))
            }
            "n" => {
                let mut edges = Vec::new();
                for (line, l) in lines {
                    let mut toks = l.split_whitespace();
                    let src = parse_id(toks.next(), line)?;
                    let dst = parse_id(toks.next(), line)?;
                    if toks.next().is_some() {
                        return Err(Error::GraphParse { line, msg: "expected `src dst`".into() });
                    }
                    if src >= count || dst >= count {
                        return Err(Error::GraphParse {
                            line,
                            msg: format!("node id out of range for n = {count}"),
                        });
                    }
                    if src == dst {
                        return Err(Error::GraphParse { line, msg: "self-loop".into() });
                    }
                    edges.push((src, dst));
                }
                Self::from_edges(count, edges)
            }
            other => Err(Error::GraphParse {
                line: hline,
                msg: format!("expected `n <count>` or `complete <count>`, found `{other}`"),
            }),
        }
    }

    /// Inverse of [`Topology::parse`] (always the explicit form).
    pub fn to_edge_list(&self) -> String {
        let mut s = format!("n {}\n", self.n);
        for (src, dst) in self.edges() {
            let _ = writeln!(s, "{src} {dst}");
        }
        s
    }
}

fn parse_id(tok: Option<&str>, line: usize) -> Result<usize> {
    let tok = tok.ok_or(Error::GraphParse { line, msg: "missing number".into() })?;
    tok.parse()
        .map_err(|_| Error::GraphParse { line, msg: format!("`{tok}` is not a node id") })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complete_flag_and_neighbors() {
        let k4 = Topology::complete(4);
        assert!(k4.is_complete());
        assert_eq!(k4.in_neighbors(2), &[0, 1, 3]);
        assert_eq!(k4.edge_count(), 12);
        let ring = Topology::undirected(4, [(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        assert!(!ring.is_complete());
        assert!(ring.has_edge(3, 0) && ring.has_edge(0, 3));
        assert_eq!(ring.out_neighbors(1), &[0, 2]);
    }

    #[test]
    fn parse_formats() {
        let g = Topology::parse("# ring\nn 3\n0 1\n1 2\n\n2 0 # back\n").unwrap();
        assert_eq!(g.edge_count(), 3);
        assert!(g.has_edge(2, 0));
        assert_eq!(Topology::parse("complete 5").unwrap(), Topology::complete(5));
        assert_eq!(Topology::parse(&g.to_edge_list()).unwrap(), g);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        assert!(matches!(Topology::parse(""), Err(Error::GraphParse { line: 0, .. })));
        assert!(matches!(Topology::parse("n 2\n0 5"), Err(Error::GraphParse { line: 2, .. })));
        assert!(matches!(Topology::parse("n 2\n1 1"), Err(Error::GraphParse { line: 2, .. })));
        assert!(matches!(Topology::parse("nodes 2"), Err(Error::GraphParse { line: 1, .. })));
        assert!(matches!(Topology::parse("complete 3\n0 1"), Err(Error::GraphParse { line: 2, .. })));
        assert!(matches!(Topology::parse("n 3\n0 x"), Err(Error::GraphParse { line: 2, .. })));
    }

    #[test]
    fn rejects_self_loops() {
        assert!(Topology::from_edges(2, [(1, 1)]).is_err());
        assert!(Topology::from_edges(2, [(0, 2)]).is_err());
    }
}
