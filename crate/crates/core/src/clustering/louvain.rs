//! Multi-level Louvain modularity optimisation on weighted graphs.
//!
//! Vertices are visited in a seeded random order. A vertex moves only when some
//! neighbouring cluster strictly beats staying put; among equally good targets
//! the lowest cluster index wins. Levels are aggregated until a pass moves
//! nothing.

use rand::seq::SliceRandom;

use super::Partition;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::seed;

const GAIN_TOLERANCE: f64 = 1e-12;
const MAX_SWEEPS: usize = 1_000;

/// Symmetric weighted adjacency in the adjacency-matrix convention: `self_loops[i]`
/// holds `A_ii`, so strengths add up to twice the total edge weight.
#[derive(Debug, Clone)]
pub struct WeightedGraph {
    adj: Vec<Vec<(usize, f64)>>,
    self_loops: Vec<f64>,
    strength: Vec<f64>,
    total: f64,
}

impl WeightedGraph {
    /// `edges` are undirected `(u, v, w)` triples with `u != v`.
    pub fn new(n: usize, edges: &[(usize, usize, f64)]) -> Self {
        let mut adj = vec![Vec::new(); n];
        for &(u, v, w) in edges {
            adj[u].push((v, w));
            adj[v].push((u, w));
        }
        Self::from_parts(adj, vec![0.0; n])
    }

    pub fn from_graph(g: &Graph) -> Self {
        let edges: Vec<_> = g.edges().map(|(u, v)| (u, v, 1.0)).collect();
        Self::new(g.vertex_count(), &edges)
    }

    fn from_parts(adj: Vec<Vec<(usize, f64)>>, self_loops: Vec<f64>) -> Self {
        let strength: Vec<f64> = adj
            .iter()
            .zip(&self_loops)
            .map(|(nbrs, &l)| nbrs.iter().map(|&(_, w)| w).sum::<f64>() + l)
            .collect();
        let total = strength.iter().sum();
        WeightedGraph {
            adj,
            self_loops,
            strength,
            total,
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.adj.len()
    }

    pub fn total_weight(&self) -> f64 {
        self.total / 2.0
    }

    /// Collapses each community into one vertex.
    fn aggregate(&self, community: &[usize], k: usize) -> Self {
        let mut self_loops = vec![0.0; k];
        let mut adj = vec![Vec::new(); k];
        let mut row = vec![0.0; k];
        let mut touched = Vec::new();
        let mut members = vec![Vec::new(); k];
        for (i, &c) in community.iter().enumerate() {
            members[c].push(i);
        }
        for c in 0..k {
            for &i in &members[c] {
                self_loops[c] += self.self_loops[i];
                for &(j, w) in &self.adj[i] {
                    let d = community[j];
                    if d == c {
                        self_loops[c] += w;
                    } else {
                        if row[d] == 0.0 {
                            touched.push(d);
                        }
                        row[d] += w;
                    }
                }
            }
            touched.sort_unstable();
            for &d in &touched {
                adj[c].push((d, row[d]));
                row[d] = 0.0;
            }
            touched.clear();
        }
        Self::from_parts(adj, self_loops)
    }

    /// Modularity of a community assignment on this weighted graph.
    pub fn modularity(&self, community: &[usize]) -> f64 {
        if self.total == 0.0 {
            return 0.0;
        }
        let k = community.iter().max().map_or(0, |&c| c + 1);
        let mut inside = vec![0.0; k];
        let mut volume = vec![0.0; k];
        for i in 0..self.vertex_count() {
            let c = community[i];
            volume[c] += self.strength[i];
            inside[c] += self.self_loops[i];
            for &(j, w) in &self.adj[i] {
                if community[j] == c {
                    inside[c] += w;
                }
            }
        }
        inside
            .iter()
            .zip(&volume)
            .map(|(&a, &v)| a / self.total - (v / self.total).powi(2))
            .sum()
    }
}

/// One level of local moves. Returns the community of each vertex (not compacted)
/// and whether anything moved.
pub(super) fn local_moving(g: &WeightedGraph, order: &[usize]) -> (Vec<usize>, bool) {
    let n = g.vertex_count();
    let mut community: Vec<usize> = (0..n).collect();
    let mut tot = g.strength.clone();
    let mut link = vec![0.0; n];
    let mut seen = vec![false; n];
    let mut touched: Vec<usize> = Vec::new();
    let mut any_move = false;
    if g.total == 0.0 {
        return (community, false);
    }

    for _ in 0..MAX_SWEEPS {
        let mut moved = false;
        for &i in order {
            let ki = g.strength[i];
            let own = community[i];
            for &(j, w) in &g.adj[i] {
                let c = community[j];
                if !seen[c] {
                    seen[c] = true;
                    touched.push(c);
                }
                link[c] += w;
            }
            tot[own] -= ki;
            let gain = |c: usize, link: &[f64]| link[c] - tot[c] * ki / g.total;
            let mut best = own;
            let mut best_gain = gain(own, &link);
            touched.sort_unstable();
            for &c in &touched {
                if c == own {
                    continue;
                }
                let candidate = gain(c, &link);
                if candidate > best_gain + GAIN_TOLERANCE {
                    best = c;
                    best_gain = candidate;
                }
            }
            tot[best] += ki;
            community[i] = best;
            if best != own {
                moved = true;
            }
            for &c in &touched {
                link[c] = 0.0;
                seen[c] = false;
            }
            touched.clear();
        }
        if !moved {
            break;
        }
        any_move = true;
    }
    (community, any_move)
}

/// Renumbers ids to `0..k` in order of first appearance.
pub(super) fn compact(ids: &[usize]) -> (Vec<usize>, usize) {
    let mut map = vec![usize::MAX; ids.iter().max().map_or(0, |&m| m + 1)];
    let mut next = 0;
    let out = ids
        .iter()
        .map(|&c| {
            if map[c] == usize::MAX {
                map[c] = next;
                next += 1;
            }
            map[c]
        })
        .collect();
    (out, next)
}

pub(super) fn shuffled_order(n: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seed::rng(seed));
    order
}

/// Full multi-level Louvain on a weighted graph.
pub fn louvain_weighted(g: &WeightedGraph, seed: u64) -> Partition {
    let n = g.vertex_count();
    let mut membership: Vec<usize> = (0..n).collect();
    let mut current = g.clone();
    let mut level = 0u64;
    loop {
        let order = shuffled_order(current.vertex_count(), seed::derive(seed, seed::CLUSTERING, level));
        let (community, moved) = local_moving(&current, &order);
        if !moved {
            break;
        }
        let (community, k) = compact(&community);
        for m in &mut membership {
            *m = community[*m];
        }
        if k == current.vertex_count() {
            break;
        }
        current = current.aggregate(&community, k);
        level += 1;
    }
    Partition::from_labels(&membership)
}

/// Louvain on an unweighted graph, deterministic in `seed`.
pub fn louvain(g: &Graph, seed: u64) -> Result<Partition> {
    if g.edge_count() == 0 {
        return Err(Error::EdgelessGraph);
    }
    Ok(louvain_weighted(&WeightedGraph::from_graph(g), seed))
}
