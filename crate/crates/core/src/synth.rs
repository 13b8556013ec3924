//! Seeded synthetic instances: planted-partition graphs and embeddings of known
//! quality.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::clustering::Partition;
use crate::embedding::Embedding;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::seed;

pub const MAX_ATTEMPTS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantedSpec {
    pub n: usize,
    pub clusters: usize,
    pub p_in: f64,
    pub p_out: f64,
    pub seed: u64,
}

impl PlantedSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.clusters >= 1 && self.n >= self.clusters) {
            return Err(Error::InvalidParameter(format!(
                "need n >= clusters >= 1 (n = {}, clusters = {})",
                self.n, self.clusters
            )));
        }
        if !(0.0 <= self.p_out && self.p_out < self.p_in && self.p_in <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "need 0 <= p_out < p_in <= 1 (p_in = {}, p_out = {})",
                self.p_in, self.p_out
            )));
        }
        Ok(())
    }
}

/// Contiguous blocks of near-equal size; the first `n mod ℓ` clusters get one extra vertex.
fn planted_assignment(n: usize, clusters: usize) -> Vec<usize> {
    let base = n / clusters;
    let extra = n % clusters;
    (0..clusters)
        .flat_map(|c| std::iter::repeat_n(c, base + usize::from(c < extra)))
        .collect()
}

/// Planted-partition graph with its ground-truth clusters. Edge draws are
/// retried with fresh derived seeds until the graph is connected.
pub fn planted_partition(spec: &PlantedSpec) -> Result<(Graph, Partition)> {
    spec.validate()?;
    let assignment = planted_assignment(spec.n, spec.clusters);
    for attempt in 0..MAX_ATTEMPTS as u64 {
        let mut rng = seed::rng(seed::derive(spec.seed, seed::SYNTH_GRAPH, attempt));
        let mut edges = Vec::new();
        for u in 0..spec.n {
            for v in u + 1..spec.n {
                let p = if assignment[u] == assignment[v] {
                    spec.p_in
                } else {
                    spec.p_out
                };
                if rng.random::<f64>() < p {
                    edges.push((u, v));
                }
            }
        }
        let g = Graph::from_index_edges(spec.n, edges)?;
        if g.is_connected() {
            return Ok((g, Partition::new(assignment)?));
        }
    }
    Err(Error::Disconnected {
        attempts: MAX_ATTEMPTS,
    })
}

/// Integer lattice points of `Z^dim`, the first `count` in base-`side` order.
fn lattice_points(count: usize, dim: usize) -> Vec<Vec<f64>> {
    let mut side = 1usize;
    while side.checked_pow(dim as u32).is_some_and(|cap| cap < count) {
        side += 1;
    }
    (0..count)
        .map(|mut k| {
            (0..dim)
                .map(|_| {
                    let digit = k % side;
                    k /= side;
                    digit as f64
                })
                .collect()
        })
        .collect()
}

/// Clusters placed at distinct lattice points scaled by `separation`, vertices
/// scattered around their center with isotropic Gaussian noise of std `spread`.
pub fn structured_embedding(p: &Partition, dim: usize, separation: f64, spread: f64, seed: u64) -> Result<Embedding> {
    if dim < 2 {
        return Err(Error::InvalidParameter(format!("dimension must be at least 2, got {dim}")));
    }
    if !(separation >= 0.0 && spread >= 0.0) {
        return Err(Error::InvalidParameter("separation and spread must be non-negative".into()));
    }
    let centers = lattice_points(p.cluster_count(), dim);
    let noise = Normal::new(0.0, spread).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut rng = seed::rng(seed::derive(seed, seed::SYNTH_EMBEDDING, 0));
    let mut coords = Vec::with_capacity(p.vertex_count() * dim);
    for v in 0..p.vertex_count() {
        for &c in &centers[p.cluster_of(v)] {
            let offset = if spread > 0.0 { noise.sample(&mut rng) } else { 0.0 };
            coords.push(separation * c + offset);
        }
    }
    Embedding::new(dim, coords)
}

/// I.i.d. uniform coordinates in `[0, 1)^dim`.
pub fn random_embedding(n: usize, dim: usize, seed: u64) -> Result<Embedding> {
    if dim < 1 {
        return Err(Error::InvalidParameter("dimension must be at least 1".into()));
    }
    let mut rng = seed::rng(seed::derive(seed, seed::SYNTH_EMBEDDING, 1));
    Embedding::new(dim, (0..n * dim).map(|_| rng.random::<f64>()).collect())
}

/// Permutes the rows of a random `fraction` of vertices among themselves,
/// degrading an embedding by a controlled amount.
pub fn shuffle_rows(e: &Embedding, fraction: f64, seed: u64) -> Result<Embedding> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::InvalidParameter(format!("fraction must lie in [0, 1], got {fraction}")));
    }
    let n = e.vertex_count();
    let mut rng = seed::rng(seed::derive(seed, seed::SYNTH_EMBEDDING, 2));
    let mut chosen: Vec<usize> = (0..n).collect();
    chosen.shuffle(&mut rng);
    chosen.truncate((fraction * n as f64).round() as usize);
    let mut targets = chosen.clone();
    targets.shuffle(&mut rng);
    let mut source: Vec<usize> = (0..n).collect();
    for (&dst, &src) in chosen.iter().zip(&targets) {
        source[dst] = src;
    }
    let coords = source.iter().flat_map(|&v| e.row(v).iter().copied()).collect();
    Embedding::new(e.dim(), coords)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divergence::observed_block_proportions;

    #[test]
    fn assignment_sizes_are_balanced() {
        let a = planted_assignment(10, 3);
        assert_eq!(a, vec![0, 0, 0, 0, 1, 1, 1, 2, 2, 2]);
    }

    #[test]
    fn single_cluster_is_erdos_renyi() {
        let spec = PlantedSpec {
            n: 30,
            clusters: 1,
            p_in: 0.3,
            p_out: 0.0,
            seed: 1,
        };
        let (g, p) = planted_partition(&spec).unwrap();
        assert_eq!(p.cluster_count(), 1);
        assert!(g.is_connected());
        // mean of G(30, 0.3) is 130.5 edges, sd ≈ 9.9
        assert!((g.edge_count() as f64 - 130.5).abs() < 50.0);
    }

    #[test]
    fn internal_share_is_high() {
        // expected internal share: 3·C(20,2)·0.4 = 228 vs 1200·0.02 = 24 → ≈ 0.905
        for s in 0..20 {
            let spec = PlantedSpec {
                n: 60,
                clusters: 3,
                p_in: 0.4,
                p_out: 0.02,
                seed: s,
            };
            let (g, p) = planted_partition(&spec).unwrap();
            assert_eq!(p.cluster_count(), 3);
            let c = observed_block_proportions(&g, &p).unwrap();
            assert!(c.internal.iter().sum::<f64>() >= 0.8);
        }
    }

    #[test]
    fn disjoint_cliques_are_rejected() {
        let spec = PlantedSpec {
            n: 10,
            clusters: 2,
            p_in: 1.0,
            p_out: 0.0,
            seed: 0,
        };
        assert!(matches!(planted_partition(&spec), Err(Error::Disconnected { .. })));
    }

    #[test]
    fn invalid_specs() {
        let base = PlantedSpec {
            n: 10,
            clusters: 2,
            p_in: 0.5,
            p_out: 0.1,
            seed: 0,
        };
        assert!(planted_partition(&PlantedSpec { p_out: 0.5, ..base }).is_err());
        assert!(planted_partition(&PlantedSpec { clusters: 11, ..base }).is_err());
        assert!(planted_partition(&PlantedSpec { p_in: 1.5, ..base }).is_err());
    }

    #[test]
    fn deterministic_per_seed() {
        let spec = PlantedSpec {
            n: 40,
            clusters: 4,
            p_in: 0.5,
            p_out: 0.05,
            seed: 77,
        };
        assert_eq!(planted_partition(&spec).unwrap(), planted_partition(&spec).unwrap());
        let p = Partition::new(vec![0, 0, 1, 1]).unwrap();
        assert_eq!(
            structured_embedding(&p, 3, 2.0, 0.5, 9).unwrap(),
            structured_embedding(&p, 3, 2.0, 0.5, 9).unwrap()
        );
        assert_eq!(random_embedding(10, 2, 3).unwrap(), random_embedding(10, 2, 3).unwrap());
        assert_ne!(random_embedding(10, 2, 3).unwrap(), random_embedding(10, 2, 4).unwrap());
    }

    #[test]
    fn zero_spread_collapses_clusters() {
        let p = Partition::new(vec![0, 0, 1, 1, 2, 2, 3, 3, 4]).unwrap();
        let e = structured_embedding(&p, 2, 3.0, 0.0, 1).unwrap();
        for u in 0..9 {
            for v in 0..9 {
                let d = e.distance(u, v);
                if p.cluster_of(u) == p.cluster_of(v) {
                    assert_eq!(d, 0.0);
                } else {
                    assert!(d >= 3.0);
                }
            }
        }
    }

    #[test]
    fn zero_separation_is_one_cloud() {
        let p = Partition::new(vec![0, 1, 2]).unwrap();
        let e = structured_embedding(&p, 2, 0.0, 0.0, 1).unwrap();
        assert!(e.coords().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn separated_clusters_are_separable() {
        let p = Partition::new((0..40).map(|v| v / 20).collect()).unwrap();
        let mut separable = 0;
        for s in 0..100 {
            let e = structured_embedding(&p, 2, 20.0, 1.0, s).unwrap();
            let mut max_intra: f64 = 0.0;
            let mut min_cross = f64::INFINITY;
            for u in 0..40 {
                for v in u + 1..40 {
                    let d = e.distance(u, v);
                    if p.cluster_of(u) == p.cluster_of(v) {
                        max_intra = max_intra.max(d);
                    } else {
                        min_cross = min_cross.min(d);
                    }
                }
            }
            separable += usize::from(min_cross > max_intra);
        }
        assert!(separable >= 99, "{separable}");
    }

    #[test]
    fn random_embedding_in_unit_cube() {
        let e = random_embedding(100, 2, 5).unwrap();
        assert!(e.coords().iter().all(|&x| (0.0..1.0).contains(&x)));
        // mean distance between uniform points in the unit square ≈ 0.5214
        let mut total = 0.0;
        for u in 0..100 {
            for v in u + 1..100 {
                total += e.distance(u, v);
            }
        }
        let mean = total / 4950.0;
        assert!((mean - 0.52).abs() < 0.05, "{mean}");
    }

    #[test]
    fn shuffling_keeps_the_multiset_of_rows() {
        let e = random_embedding(20, 3, 1).unwrap();
        let same = shuffle_rows(&e, 0.0, 2).unwrap();
        assert_eq!(same, e);
        let shuffled = shuffle_rows(&e, 1.0, 2).unwrap();
        let mut a: Vec<Vec<u64>> = (0..20).map(|v| e.row(v).iter().map(|x| x.to_bits()).collect()).collect();
        let mut b: Vec<Vec<u64>> = (0..20).map(|v| shuffled.row(v).iter().map(|x| x.to_bits()).collect()).collect();
        a.sort();
        b.sort();
        assert_eq!(a, b);
    }
}
