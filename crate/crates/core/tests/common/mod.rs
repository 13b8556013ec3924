//! Shared fixtures for the integration tests.
#![allow(dead_code)]

use std::path::{Path, PathBuf};

use embed_divergence::clustering::Partition;
use embed_divergence::embedding::Embedding;
use embed_divergence::graph::Graph;
use embed_divergence::synth;

pub fn data_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

pub fn karate() -> Graph {
    let text = std::fs::read_to_string(data_path("karate.edgelist")).unwrap();
    Graph::parse_edge_list(&text, false).unwrap()
}

pub fn karate_factions(g: &Graph) -> Partition {
    let text = std::fs::read_to_string(data_path("karate.factions")).unwrap();
    Partition::parse(&text, g).unwrap()
}

/// Two faction clouds in the plane. Vertices of the same faction sit close
/// together, so this plays the role of a good karate embedding.
pub fn karate_embedding(g: &Graph, seed: u64) -> Embedding {
    synth::structured_embedding(&karate_factions(g), 2, 1.0, 0.35, seed).unwrap()
}

/// Embeddings of decreasing quality: `i`-th has a fraction `i / count` of its
/// rows shuffled.
pub fn degraded_family(base: &Embedding, count: usize, seed: u64) -> Vec<(String, Embedding)> {
    (0..count)
        .map(|i| {
            let fraction = i as f64 / count as f64;
            let e = synth::shuffle_rows(base, fraction, seed + i as u64).unwrap();
            (format!("emb{i:02}"), e)
        })
        .collect()
}

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_embdiv")
}

/// Laplacian eigenmap: eigenvectors 2..=dim+1 of `D^{-1/2} A D^{-1/2}` (by
/// decreasing eigenvalue), rescaled by `D^{-1/2}`.
pub fn spectral_embedding(g: &Graph, dim: usize) -> Embedding {
    let n = g.vertex_count();
    let inv_sqrt: Vec<f64> = (0..n).map(|v| 1.0 / (g.degree(v) as f64).sqrt()).collect();
    let mut m = nalgebra::DMatrix::<f64>::zeros(n, n);
    for (u, v) in g.edges() {
        let x = inv_sqrt[u] * inv_sqrt[v];
        m[(u, v)] = x;
        m[(v, u)] = x;
    }
    let eig = m.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|v| {
            order[1..=dim]
                .iter()
                .map(|&k| eig.eigenvectors[(v, k)] * inv_sqrt[v])
                .collect()
        })
        .collect();
    Embedding::from_rows(&rows).unwrap()
}
