//! Immutable edge-labeled undirected graphs.
//!
//! Every undirected edge carries exactly one label from `1..=num_labels`.
//! Undirected edge `k` owns the directed-edge id pair `(2k, 2k + 1)`:
//! `2k` points from the lower-indexed endpoint as stored, `2k + 1` is its
//! reverse. Consequently the reverse of directed id `e` is always `e ^ 1`.
//! Message-passing state and non-backtracking operators index their storage
//! by these directed ids.

use crate::error::{Error, Result};
use std::collections::HashSet;
use std::fmt::Write as _;

/// One adjacency slot: the neighbor, the connecting edge's label, and the
/// directed edge id pointing from the owning vertex to `neighbor`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AdjEntry {
    pub neighbor: u32,
    pub label: u32,
    pub out_edge: u32,
}

impl AdjEntry {
    /// Directed edge id pointing from `neighbor` back to the owning vertex.
    pub fn in_edge(&self) -> u32 {
        self.out_edge ^ 1
    }

    /// Undirected edge id underlying this slot.
    pub fn edge(&self) -> u32 {
        self.out_edge >> 1
    }
}

/// An immutable undirected graph with labeled edges.
#[derive(Clone, Debug)]
pub struct LabeledGraph {
    num_vertices: usize,
    num_labels: usize,
    endpoints: Vec<(u32, u32)>,
    labels: Vec<u32>,
    edges_by_label: Vec<Vec<u32>>,
    adj: Vec<Vec<AdjEntry>>,
}

/// Validates and indexes an edge list into a [`LabeledGraph`].
///
/// `edges` holds `(u, v, label)` triples with `0`-based vertices and
/// `1`-based labels. Self-loops, duplicate vertex pairs (regardless of
/// label), out-of-range vertices, and out-of-range labels are rejected.
pub fn build_graph(
    num_vertices: usize,
    num_labels: usize,
    edges: &[(usize, usize, u32)],
) -> Result<LabeledGraph> {
    let mut endpoints = Vec::with_capacity(edges.len());
    let mut labels = Vec::with_capacity(edges.len());
    let mut edges_by_label = vec![Vec::new(); num_labels];
    let mut adj = vec![Vec::new(); num_vertices];
    let mut seen: HashSet<(u32, u32)> = HashSet::with_capacity(edges.len());

    for (k, &(u, v, label)) in edges.iter().enumerate() {
        if u >= num_vertices {
            return Err(Error::VertexOutOfRange { vertex: u, num_vertices });
        }
        if v >= num_vertices {
            return Err(Error::VertexOutOfRange { vertex: v, num_vertices });
        }
        if u == v {
            return Err(Error::SelfLoop(u));
        }
        if label == 0 || label as usize > num_labels {
            return Err(Error::LabelOutOfRange { label, num_labels });
        }
        let (u, v) = (u as u32, v as u32);
        let key = (u.min(v), u.max(v));
        if !seen.insert(key) {
            return Err(Error::DuplicateEdge(key.0 as usize, key.1 as usize));
        }
        let k = k as u32;
        endpoints.push((u, v));
        labels.push(label);
        edges_by_label[label as usize - 1].push(k);
        adj[u as usize].push(AdjEntry { neighbor: v, label, out_edge: 2 * k });
        adj[v as usize].push(AdjEntry { neighbor: u, label, out_edge: 2 * k + 1 });
    }

    Ok(LabeledGraph { num_vertices, num_labels, endpoints, labels, edges_by_label, adj })
}

impl LabeledGraph {
    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    /// Number of undirected edges.
    pub fn num_edges(&self) -> usize {
        self.endpoints.len()
    }

    /// Number of directed edge ids, always `2 * num_edges()`.
    pub fn num_directed(&self) -> usize {
        2 * self.endpoints.len()
    }

    /// Undirected edge ids carrying `label`.
    pub fn label_edges(&self, label: u32) -> &[u32] {
        &self.edges_by_label[label as usize - 1]
    }

    /// Number of undirected edges carrying `label`.
    pub fn label_edge_count(&self, label: u32) -> usize {
        self.edges_by_label[label as usize - 1].len()
    }

    /// Endpoints of undirected edge `k` in stored order.
    pub fn edge_endpoints(&self, k: usize) -> (usize, usize) {
        let (u, v) = self.endpoints[k];
        (u as usize, v as usize)
    }

    /// Label of undirected edge `k`.
    pub fn edge_label(&self, k: usize) -> u32 {
        self.labels[k]
    }

    /// Source vertex of directed edge `e`.
    pub fn dir_source(&self, e: usize) -> usize {
        let (u, v) = self.endpoints[e >> 1];
        if e & 1 == 0 { u as usize } else { v as usize }
    }

    /// Target vertex of directed edge `e`.
    pub fn dir_target(&self, e: usize) -> usize {
        let (u, v) = self.endpoints[e >> 1];
        if e & 1 == 0 { v as usize } else { u as usize }
    }

    /// Label of directed edge `e`.
    pub fn dir_label(&self, e: usize) -> u32 {
        self.labels[e >> 1]
    }

    /// The directed edge id pointing opposite to `e`.
    ///
    /// Ids come in reverse pairs `(2k, 2k + 1)`, so this is `e ^ 1` after a
    /// range check.
    pub fn reverse_edge(&self, e: usize) -> Result<usize> {
        if e >= self.num_directed() {
            return Err(Error::EdgeIdOutOfRange { id: e, num_directed: self.num_directed() });
        }
        Ok(e ^ 1)
    }

    /// Adjacency slots of vertex `v`.
    pub fn neighbors(&self, v: usize) -> &[AdjEntry] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    /// Serializes the graph as tab-separated `u v label` lines with header
    /// comments recording the vertex and label counts (needed to round-trip
    /// isolated vertices and unused labels).
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# vertices: {}", self.num_vertices);
        let _ = writeln!(out, "# labels: {}", self.num_labels);
        for (k, &(u, v)) in self.endpoints.iter().enumerate() {
            let _ = writeln!(out, "{}\t{}\t{}", u, v, self.labels[k]);
        }
        out
    }
}

/// Parses the tab-separated edge-list format produced by
/// [`LabeledGraph::to_edge_list`].
///
/// Lines starting with `#` are comments; `# vertices: N` and `# labels: p`
/// headers override the inferred counts. Without headers the vertex count is
/// the largest index seen plus one and the label count is the largest label
/// seen.
pub fn parse_edge_list(text: &str) -> Result<LabeledGraph> {
    let mut edges = Vec::new();
    let mut num_vertices: Option<usize> = None;
    let mut num_labels: Option<usize> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let comment = comment.trim();
            if let Some(v) = comment.strip_prefix("vertices:") {
                num_vertices = Some(parse_field(v, idx + 1, "vertex count")?);
            } else if let Some(v) = comment.strip_prefix("labels:") {
                num_labels = Some(parse_field(v, idx + 1, "label count")?);
            }
            continue;
        }
        let mut fields = line.split('\t');
        let u: usize = parse_field(fields.next().unwrap_or(""), idx + 1, "source vertex")?;
        let v: usize =
            parse_field(fields.next().unwrap_or(""), idx + 1, "target vertex")?;
        let label: u32 = parse_field(fields.next().unwrap_or(""), idx + 1, "label")?;
        if fields.next().is_some() {
            return Err(Error::Parse {
                line: idx + 1,
                message: "expected exactly three tab-separated fields".into(),
            });
        }
        edges.push((u, v, label));
    }

    let num_vertices = num_vertices
        .unwrap_or_else(|| edges.iter().map(|&(u, v, _)| u.max(v) + 1).max().unwrap_or(0));
    let num_labels = num_labels
        .unwrap_or_else(|| edges.iter().map(|&(_, _, l)| l as usize).max().unwrap_or(0));
    build_graph(num_vertices, num_labels, &edges)
}

fn parse_field<T: std::str::FromStr>(field: &str, line: usize, what: &str) -> Result<T> {
    field.trim().parse().map_err(|_| Error::Parse {
        line,
        message: format!("invalid {}: {:?}", what, field.trim()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> LabeledGraph {
        build_graph(3, 2, &[(0, 1, 1), (1, 2, 1), (2, 0, 2)]).unwrap()
    }

    #[test]
    fn builds_and_indexes_labeled_triangle() {
        let g = triangle();
        assert_eq!(g.num_vertices(), 3);
        assert_eq!(g.num_labels(), 2);
        assert_eq!(g.num_edges(), 3);
        assert_eq!(g.num_directed(), 6);
        assert_eq!(g.label_edge_count(1), 2);
        assert_eq!(g.label_edge_count(2), 1);
        assert_eq!(g.label_edges(1), &[0, 1]);
        assert_eq!(g.label_edges(2), &[2]);
        assert_eq!(g.edge_endpoints(2), (2, 0));
        assert_eq!(g.edge_label(2), 2);
    }

    #[test]
    fn directed_ids_pair_consecutively() {
        let g = triangle();
        assert_eq!(g.dir_source(0), 0);
        assert_eq!(g.dir_target(0), 1);
        assert_eq!(g.dir_source(1), 1);
        assert_eq!(g.dir_target(1), 0);
        assert_eq!(g.dir_source(4), 2);
        assert_eq!(g.dir_target(4), 0);
        assert_eq!(g.dir_label(4), 2);
        assert_eq!(g.dir_label(5), 2);
    }

    #[test]
    fn reverse_edge_is_an_involution() {
        let g = triangle();
        for e in 0..g.num_directed() {
            let r = g.reverse_edge(e).unwrap();
            assert_eq!(r, e ^ 1);
            assert_eq!(g.reverse_edge(r).unwrap(), e);
            assert_eq!(g.dir_source(e), g.dir_target(r));
            assert_eq!(g.dir_target(e), g.dir_source(r));
        }
    }

    #[test]
    fn reverse_edge_rejects_out_of_range_ids() {
        let g = triangle();
        assert!(matches!(
            g.reverse_edge(6),
            Err(Error::EdgeIdOutOfRange { id: 6, num_directed: 6 })
        ));
    }

    #[test]
    fn adjacency_mirrors_both_endpoints() {
        let g = triangle();
        let slots = g.neighbors(0);
        assert_eq!(slots.len(), 2);
        assert_eq!(slots[0], AdjEntry { neighbor: 1, label: 1, out_edge: 0 });
        assert_eq!(slots[1], AdjEntry { neighbor: 2, label: 2, out_edge: 5 });
        assert_eq!(slots[1].in_edge(), 4);
        assert_eq!(slots[1].edge(), 2);
        for v in 0..g.num_vertices() {
            for slot in g.neighbors(v) {
                let back = g
                    .neighbors(slot.neighbor as usize)
                    .iter()
                    .find(|s| s.neighbor as usize == v)
                    .unwrap();
                assert_eq!(back.out_edge, slot.in_edge());
                assert_eq!(back.label, slot.label);
            }
        }
    }

    #[test]
    fn rejects_self_loops_duplicates_and_range_errors() {
        assert!(matches!(
            build_graph(3, 1, &[(0, 0, 1)]),
            Err(Error::SelfLoop(0))
        ));
        assert!(matches!(
            build_graph(3, 1, &[(0, 1, 1), (1, 0, 1)]),
            Err(Error::DuplicateEdge(0, 1))
        ));
        assert!(matches!(
            build_graph(3, 2, &[(0, 1, 1), (1, 0, 2)]),
            Err(Error::DuplicateEdge(0, 1))
        ));
        assert!(matches!(
            build_graph(3, 1, &[(0, 3, 1)]),
            Err(Error::VertexOutOfRange { vertex: 3, num_vertices: 3 })
        ));
        assert!(matches!(
            build_graph(3, 1, &[(0, 1, 2)]),
            Err(Error::LabelOutOfRange { label: 2, num_labels: 1 })
        ));
        assert!(matches!(
            build_graph(3, 1, &[(0, 1, 0)]),
            Err(Error::LabelOutOfRange { label: 0, num_labels: 1 })
        ));
    }

    #[test]
    fn permits_isolated_vertices_and_empty_labels() {
        let g = build_graph(5, 3, &[(0, 1, 2)]).unwrap();
        assert_eq!(g.degree(4), 0);
        assert_eq!(g.label_edge_count(1), 0);
        assert_eq!(g.label_edge_count(3), 0);
    }

    #[test]
    fn edge_list_round_trips_isolated_vertices_and_labels() {
        let g = build_graph(6, 3, &[(0, 1, 1), (4, 2, 3)]).unwrap();
        let text = g.to_edge_list();
        let h = parse_edge_list(&text).unwrap();
        assert_eq!(h.num_vertices(), 6);
        assert_eq!(h.num_labels(), 3);
        assert_eq!(h.num_edges(), 2);
        assert_eq!(h.edge_endpoints(1), (4, 2));
        assert_eq!(h.edge_label(1), 3);
        assert_eq!(h.to_edge_list(), text);
    }

    #[test]
    fn edge_list_parses_comments_and_infers_counts() {
        let text = "# free-form comment\n0\t1\t1\n\n2\t0\t2\n";
        let g = parse_edge_list(text).unwrap();
        assert_eq!(g.num_vertices(), 3);
        assert_eq!(g.num_labels(), 2);
        assert_eq!(g.num_edges(), 2);
        assert!(parse_edge_list("0\t1\n").is_err());
        assert!(parse_edge_list("0\t1\tx\n").is_err());
    }
}
