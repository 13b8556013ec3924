//! Undirected simple graphs over dense vertex indices.
//!
//! External vertex labels live in a side table; everything downstream works on
//! indices `0..n`. Parsing drops self-loops and duplicate edges and symmetrizes
//! directed input.

use std::collections::{HashMap, VecDeque};

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    labels: Vec<String>,
    index: HashMap<String, usize>,
    adjacency: Vec<Vec<usize>>,
    edge_count: usize,
}

/// Degree of every vertex, in internal index order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeVector(Vec<u64>);

impl DegreeVector {
    pub fn new(degrees: Vec<u64>) -> Self {
        DegreeVector(degrees)
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&d| d as f64).collect()
    }
}

#[derive(Serialize)]
struct GraphJson<'a> {
    n: usize,
    m: usize,
    edges: &'a [[usize; 2]],
}

impl Graph {
    /// Builds a simple graph from index pairs. Self-loops and repeated pairs are dropped.
    pub fn from_edges(labels: Vec<String>, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let n = labels.len();
        let mut adjacency = vec![Vec::new(); n];
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidParameter(format!(
                    "edge ({u}, {v}) references a vertex outside 0..{n}"
                )));
            }
            if u == v {
                continue;
            }
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        let mut edge_count = 0;
        for nbrs in &mut adjacency {
            nbrs.sort_unstable();
            nbrs.dedup();
            edge_count += nbrs.len();
        }
        let mut index = HashMap::with_capacity(n);
        for (i, label) in labels.iter().enumerate() {
            if index.insert(label.clone(), i).is_some() {
                return Err(Error::DuplicateVertex { label: label.clone() });
            }
        }
        Ok(Graph {
            labels,
            index,
            adjacency,
            edge_count: edge_count / 2,
        })
    }

    /// Same as [`Graph::from_edges`] with labels `"0"`, `"1"`, ...
    pub fn from_index_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        Self::from_edges((0..n).map(|i| i.to_string()).collect(), edges)
    }

    /// Parses a whitespace-separated edge list. Lines starting with `#` are comments.
    ///
    /// Every edge is stored undirected whatever `directed_hint` says: reciprocal
    /// directed pairs collapse into a single unweighted edge.
    pub fn parse_edge_list(text: &str, directed_hint: bool) -> Result<Self> {
        if directed_hint {
            log::debug!("symmetrizing directed edge list");
        }
        let mut labels: Vec<String> = Vec::new();
        let mut index: HashMap<String, usize> = HashMap::new();
        let mut edges = Vec::new();
        let mut intern = |tok: &str, labels: &mut Vec<String>| -> usize {
            *index.entry(tok.to_owned()).or_insert_with(|| {
                labels.push(tok.to_owned());
                labels.len() - 1
            })
        };
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let tokens: Vec<&str> = line.split_whitespace().collect();
            if tokens.len() != 2 {
                return Err(Error::Parse {
                    line: lineno + 1,
                    message: format!("expected 2 vertex tokens, found {}", tokens.len()),
                });
            }
            let u = intern(tokens[0], &mut labels);
            let v = intern(tokens[1], &mut labels);
            edges.push((u, v));
        }
        Self::from_edges(labels, edges)
    }

    pub fn vertex_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn label(&self, v: usize) -> &str {
        &self.labels[v]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    /// Each undirected edge once, as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(u, nbrs)| nbrs.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacency[u].binary_search(&v).is_ok()
    }

    pub fn degree_sequence(&self) -> DegreeVector {
        DegreeVector(self.adjacency.iter().map(|a| a.len() as u64).collect())
    }

    /// Replaces the vertex labels, keeping the edge structure.
    pub fn with_labels(self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.vertex_count() {
            return Err(Error::LengthMismatch(labels.len(), self.vertex_count()));
        }
        let edges: Vec<_> = self.edges().collect();
        Self::from_edges(labels, edges)
    }

    /// Component id per vertex, numbered in order of their smallest vertex.
    pub fn connected_components(&self) -> Vec<usize> {
        let n = self.vertex_count();
        let mut comp = vec![usize::MAX; n];
        let mut next = 0;
        let mut queue = VecDeque::new();
        for start in 0..n {
            if comp[start] != usize::MAX {
                continue;
            }
            comp[start] = next;
            queue.push_back(start);
            while let Some(u) = queue.pop_front() {
                for &v in &self.adjacency[u] {
                    if comp[v] == usize::MAX {
                        comp[v] = next;
                        queue.push_back(v);
                    }
                }
            }
            next += 1;
        }
        comp
    }

    pub fn is_connected(&self) -> bool {
        self.vertex_count() > 0 && self.connected_components().iter().all(|&c| c == 0)
    }

    /// Subgraph induced by `vertices`, relabelled in the given order.
    pub fn induced_subgraph(&self, vertices: &[usize]) -> Result<Self> {
        let mut remap = vec![usize::MAX; self.vertex_count()];
        for (new, &old) in vertices.iter().enumerate() {
            remap[old] = new;
        }
        let labels = vertices.iter().map(|&v| self.labels[v].clone()).collect();
        let edges = self
            .edges()
            .filter(|&(u, v)| remap[u] != usize::MAX && remap[v] != usize::MAX)
            .map(|(u, v)| (remap[u], remap[v]));
        Self::from_edges(labels, edges)
    }

    /// Largest connected component. Among equally large components the one
    /// holding the smallest vertex index wins.
    pub fn largest_connected_component(&self) -> Result<Self> {
        if self.vertex_count() == 0 {
            return Err(Error::EmptyGraph);
        }
        let comp = self.connected_components();
        let count = comp.iter().max().map_or(0, |&c| c + 1);
        let mut sizes = vec![0usize; count];
        for &c in &comp {
            sizes[c] += 1;
        }
        // components are numbered by smallest member, so the first maximum wins ties
        let mut best = 0;
        for (c, &size) in sizes.iter().enumerate() {
            if size > sizes[best] {
                best = c;
            }
        }
        let members: Vec<usize> = (0..self.vertex_count()).filter(|&v| comp[v] == best).collect();
        self.induced_subgraph(&members)
    }

    /// Edge-list text using the external labels.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for (u, v) in self.edges() {
            out.push_str(&self.labels[u]);
            out.push(' ');
            out.push_str(&self.labels[v]);
            out.push('\n');
        }
        out
    }

    /// `{"n":…, "m":…, "edges":[[i,j],…]}` over internal indices.
    pub fn to_json(&self) -> String {
        let edges: Vec<[usize; 2]> = self.edges().map(|(u, v)| [u, v]).collect();
        serde_json::to_string(&GraphJson {
            n: self.vertex_count(),
            m: self.edge_count,
            edges: &edges,
        })
        .expect("graph json serialization")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> Graph {
        Graph::parse_edge_list("1 2\n2 3\n3 1", false).unwrap()
    }

    #[test]
    fn parses_triangle() {
        let g = triangle();
        assert_eq!(g.vertex_count(), 3);
        assert_eq!(g.edge_count(), 3);
        assert_eq!(g.degree_sequence().as_slice(), &[2, 2, 2]);
    }

    #[test]
    fn drops_duplicates_and_loops() {
        let g = Graph::parse_edge_list("a b\nb a\na a", true).unwrap();
        assert_eq!(g.vertex_count(), 2);
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.labels(), &["a".to_string(), "b".to_string()]);
    }

    #[test]
    fn comments_and_tabs() {
        let g = Graph::parse_edge_list("# header\n\n1\t2\n  2 3  \n", false).unwrap();
        assert_eq!(g.edge_count(), 2);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let err = Graph::parse_edge_list("1 2\n2 3 4\n", false).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(Graph::parse_edge_list("1\n", false).is_err());
    }

    #[test]
    fn star_degrees() {
        let g = Graph::parse_edge_list("c 1\nc 2\nc 3\nc 4", false).unwrap();
        assert_eq!(g.degree_sequence().as_slice(), &[4, 1, 1, 1, 1]);
    }

    #[test]
    fn lcc_drops_isolated_vertex() {
        let g = Graph::from_index_edges(4, [(0, 1), (1, 2), (2, 0)]).unwrap();
        let lcc = g.largest_connected_component().unwrap();
        assert_eq!(lcc.vertex_count(), 3);
        assert_eq!(lcc.edge_count(), 3);
    }

    #[test]
    fn lcc_tie_prefers_first_vertex() {
        let g = Graph::parse_edge_list("x y\ny z\nz x\na b\nb c\nc a", false).unwrap();
        let lcc = g.largest_connected_component().unwrap();
        assert_eq!(lcc.labels(), &["x", "y", "z"]);
    }

    #[test]
    fn lcc_of_empty_graph_fails() {
        let g = Graph::from_index_edges(0, []).unwrap();
        assert!(matches!(g.largest_connected_component(), Err(Error::EmptyGraph)));
    }

    #[test]
    fn json_export() {
        let g = triangle();
        assert_eq!(g.to_json(), r#"{"n":3,"m":3,"edges":[[0,1],[0,2],[1,2]]}"#);
    }
}
