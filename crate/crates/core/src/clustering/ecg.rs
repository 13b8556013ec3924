//! Ensemble clustering for graphs (ECG).
//!
//! `ensemble_size` single-level Louvain passes vote on every edge. An edge of
//! the 2-core gets weight `w_min + (1 - w_min) * votes / ensemble_size`; every
//! other edge gets `w_min`. A full Louvain run on the reweighted graph gives the
//! final partition.

use rayon::prelude::*;

use super::louvain::{local_moving, louvain_weighted, shuffled_order, WeightedGraph};
use super::Partition;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::seed;

pub const DEFAULT_ENSEMBLE_SIZE: usize = 16;
pub const DEFAULT_MIN_WEIGHT: f64 = 0.05;

#[derive(Debug, Clone, Copy)]
pub struct EcgConfig {
    pub ensemble_size: usize,
    pub min_weight: f64,
}

impl Default for EcgConfig {
    fn default() -> Self {
        EcgConfig {
            ensemble_size: DEFAULT_ENSEMBLE_SIZE,
            min_weight: DEFAULT_MIN_WEIGHT,
        }
    }
}

/// Vertices of the 2-core (repeatedly strip vertices of degree < 2).
fn two_core(g: &Graph) -> Vec<bool> {
    let n = g.vertex_count();
    let mut degree: Vec<usize> = (0..n).map(|v| g.degree(v)).collect();
    let mut alive = vec![true; n];
    let mut stack: Vec<usize> = (0..n).filter(|&v| degree[v] < 2).collect();
    while let Some(v) = stack.pop() {
        if !alive[v] {
            continue;
        }
        alive[v] = false;
        for &u in g.neighbors(v) {
            if alive[u] {
                degree[u] -= 1;
                if degree[u] < 2 {
                    stack.push(u);
                }
            }
        }
    }
    alive
}

/// Consensus edge weights, in `g.edges()` order.
pub(crate) fn consensus_weights(g: &Graph, config: EcgConfig, seed: u64) -> Vec<f64> {
    let base = WeightedGraph::from_graph(g);
    let n = g.vertex_count();
    let passes: Vec<Vec<usize>> = (0..config.ensemble_size as u64)
        .into_par_iter()
        .map(|i| {
            let pass_seed = seed::derive(seed, seed::CLUSTERING, i);
            let order = shuffled_order(n, seed::derive(pass_seed, seed::CLUSTERING, 0));
            local_moving(&base, &order).0
        })
        .collect();
    let core = two_core(g);
    g.edges()
        .map(|(u, v)| {
            if !(core[u] && core[v]) {
                return config.min_weight;
            }
            let votes = passes.iter().filter(|c| c[u] == c[v]).count();
            config.min_weight + (1.0 - config.min_weight) * votes as f64 / config.ensemble_size as f64
        })
        .collect()
}

/// ECG partition of `g`, deterministic in `seed`.
pub fn ecg(g: &Graph, ensemble_size: usize, seed: u64) -> Result<Partition> {
    ecg_with(
        g,
        EcgConfig {
            ensemble_size,
            ..EcgConfig::default()
        },
        seed,
    )
}

pub fn ecg_with(g: &Graph, config: EcgConfig, seed: u64) -> Result<Partition> {
    if config.ensemble_size == 0 {
        return Err(Error::InvalidParameter("ensemble size must be at least 1".into()));
    }
    if !(config.min_weight > 0.0 && config.min_weight <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "minimum edge weight must lie in (0, 1], got {}",
            config.min_weight
        )));
    }
    if g.edge_count() == 0 {
        return Err(Error::EdgelessGraph);
    }
    let weights = consensus_weights(g, config, seed);
    let edges: Vec<(usize, usize, f64)> = g.edges().zip(weights).map(|((u, v), w)| (u, v, w)).collect();
    let reweighted = WeightedGraph::new(g.vertex_count(), &edges);
    Ok(louvain_weighted(
        &reweighted,
        seed::derive(seed, seed::CLUSTERING, u64::MAX),
    ))
}
