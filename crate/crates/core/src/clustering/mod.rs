//! Vertex partitions: Louvain, the ECG consensus ensemble, and partition diagnostics.

mod ecg;
mod louvain;

pub use ecg::{ecg, ecg_with, EcgConfig, DEFAULT_ENSEMBLE_SIZE, DEFAULT_MIN_WEIGHT};
pub use louvain::{louvain, louvain_weighted, WeightedGraph};

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Disjoint clusters covering every vertex. Cluster ids are `0..cluster_count`,
/// all non-empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    assignment: Vec<usize>,
    cluster_count: usize,
}

impl Partition {
    /// Validates that ids are compact and every cluster is used.
    pub fn new(assignment: Vec<usize>) -> Result<Self> {
        let cluster_count = assignment.iter().max().map_or(0, |&c| c + 1);
        let mut used = vec![false; cluster_count];
        for &c in &assignment {
            used[c] = true;
        }
        if let Some(c) = used.iter().position(|&u| !u) {
            return Err(Error::InvalidPartition(format!("cluster {c} is empty")));
        }
        Ok(Partition {
            assignment,
            cluster_count,
        })
    }

    /// Relabels arbitrary ids to `0..ℓ` in order of first appearance.
    pub fn from_labels<T: Eq + std::hash::Hash>(raw: &[T]) -> Self {
        let mut ids = HashMap::new();
        let assignment = raw
            .iter()
            .map(|c| {
                let next = ids.len();
                *ids.entry(c).or_insert(next)
            })
            .collect();
        Partition {
            assignment,
            cluster_count: ids.len(),
        }
    }

    pub fn singletons(n: usize) -> Self {
        Partition {
            assignment: (0..n).collect(),
            cluster_count: n,
        }
    }

    pub fn whole(n: usize) -> Self {
        Partition {
            assignment: vec![0; n],
            cluster_count: usize::from(n > 0),
        }
    }

    pub fn cluster_of(&self, v: usize) -> usize {
        self.assignment[v]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn cluster_count(&self) -> usize {
        self.cluster_count
    }

    pub fn vertex_count(&self) -> usize {
        self.assignment.len()
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.cluster_count];
        for &c in &self.assignment {
            sizes[c] += 1;
        }
        sizes
    }

    pub fn members(&self, cluster: usize) -> Vec<usize> {
        (0..self.assignment.len())
            .filter(|&v| self.assignment[v] == cluster)
            .collect()
    }

    pub(crate) fn check_vertex_count(&self, n: usize) -> Result<()> {
        if self.assignment.len() != n {
            return Err(Error::InvalidPartition(format!(
                "partition covers {} vertices, graph has {n}",
                self.assignment.len()
            )));
        }
        Ok(())
    }

    /// Parses `label cluster_id` lines. Cluster ids may be any token; they are
    /// renumbered in vertex order.
    pub fn parse(text: &str, g: &Graph) -> Result<Self> {
        let mut raw: Vec<Option<String>> = vec![None; g.vertex_count()];
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let tokens: Vec<&str> = line.split_whitespace().collect();
            if tokens.len() != 2 {
                return Err(Error::Parse {
                    line: lineno + 1,
                    message: format!("expected `label cluster`, found {} tokens", tokens.len()),
                });
            }
            // labels outside the graph are ignored (e.g. vertices dropped with small components)
            if let Some(v) = g.index_of(tokens[0]) {
                if raw[v].replace(tokens[1].to_owned()).is_some() {
                    return Err(Error::DuplicateVertex {
                        label: tokens[0].to_owned(),
                    });
                }
            }
        }
        let mut ids = Vec::with_capacity(raw.len());
        for (v, c) in raw.into_iter().enumerate() {
            match c {
                Some(c) => ids.push(c),
                None => {
                    return Err(Error::InvalidPartition(format!(
                        "vertex {} has no cluster",
                        g.label(v)
                    )))
                }
            }
        }
        Ok(Partition::from_labels(&ids))
    }

    pub fn to_text(&self, g: &Graph) -> String {
        let mut out = String::new();
        for (v, c) in self.assignment.iter().enumerate() {
            out.push_str(g.label(v));
            out.push(' ');
            out.push_str(&c.to_string());
            out.push('\n');
        }
        out
    }
}

/// Newman modularity `Σ_c [ e_c/m − (vol_c / 2m)² ]`.
pub fn modularity(g: &Graph, p: &Partition) -> f64 {
    let m = g.edge_count() as f64;
    if m == 0.0 {
        return 0.0;
    }
    let mut internal = vec![0.0; p.cluster_count()];
    let mut volume = vec![0.0; p.cluster_count()];
    for v in 0..g.vertex_count() {
        volume[p.cluster_of(v)] += g.degree(v) as f64;
    }
    for (u, v) in g.edges() {
        if p.cluster_of(u) == p.cluster_of(v) {
            internal[p.cluster_of(u)] += 1.0;
        }
    }
    internal
        .iter()
        .zip(&volume)
        .map(|(&e, &vol)| e / m - (vol / (2.0 * m)).powi(2))
        .sum()
}

/// Ratio of internal degree to total degree for each cluster. A cluster is a
/// weak community when its ratio exceeds 0.5.
pub fn community_strength(g: &Graph, p: &Partition) -> Vec<f64> {
    let mut internal = vec![0usize; p.cluster_count()];
    let mut external = vec![0usize; p.cluster_count()];
    for (u, v) in g.edges() {
        let (cu, cv) = (p.cluster_of(u), p.cluster_of(v));
        if cu == cv {
            internal[cu] += 1;
        } else {
            external[cu] += 1;
            external[cv] += 1;
        }
    }
    internal
        .iter()
        .zip(&external)
        .map(|(&i, &e)| {
            let total = 2 * i + e;
            if total == 0 {
                0.0
            } else {
                (2 * i) as f64 / total as f64
            }
        })
        .collect()
}

/// Fraction of vertex pairs on which two partitions agree (same/different cluster).
pub fn rand_index(a: &Partition, b: &Partition) -> Result<f64> {
    if a.vertex_count() != b.vertex_count() {
        return Err(Error::LengthMismatch(a.vertex_count(), b.vertex_count()));
    }
    let n = a.vertex_count();
    if n < 2 {
        return Ok(1.0);
    }
    let mut agree = 0usize;
    for i in 0..n {
        for j in i + 1..n {
            let same_a = a.cluster_of(i) == a.cluster_of(j);
            let same_b = b.cluster_of(i) == b.cluster_of(j);
            agree += usize::from(same_a == same_b);
        }
    }
    Ok(agree as f64 / (n * (n - 1) / 2) as f64)
}
