mod common;

use embed_divergence::clustering::{self, Partition};
use embed_divergence::divergence::{observed_block_proportions, AlphaGrid, ScoreParams, Scorer};
use embed_divergence::gcl::{feasibility_check, fit_weights, FitParams};
use embed_divergence::{seed, synth};

#[test]
fn dataset_shape() {
    let g = common::karate();
    assert_eq!(g.vertex_count(), 34);
    assert_eq!(g.edge_count(), 78);
    assert_eq!(g.degree(g.index_of("1").unwrap()), 16);
    assert_eq!(g.degree(g.index_of("34").unwrap()), 17);
    let w = g.degree_sequence();
    assert_eq!(w.total(), 156);
    assert_eq!(w.as_slice().iter().max(), Some(&17));
    assert!(feasibility_check(&w).is_ok());
    assert!(g.is_connected());
}

#[test]
fn faction_split_has_ten_cross_edges() {
    let g = common::karate();
    let factions = common::karate_factions(&g);
    assert_eq!(factions.cluster_sizes(), vec![16, 18]);
    let c = observed_block_proportions(&g, &factions).unwrap();
    assert_eq!(c.external.len(), 1);
    assert!((c.external[0] - 10.0 / 78.0).abs() < 1e-15);
}

#[test]
fn louvain_modularity_for_every_seed() {
    let g = common::karate();
    let baseline = clustering::modularity(&g, &Partition::singletons(34));
    assert!(baseline <= 0.0);
    for s in 0..20 {
        let p = clustering::louvain(&g, s).unwrap();
        let q = clustering::modularity(&g, &p);
        assert!(q >= 0.35, "seed {s}: Q = {q}");
        assert!((2..=6).contains(&p.cluster_count()));
    }
}

#[test]
fn ecg_is_stable_across_seeds() {
    let g = common::karate();
    let mut worst: f64 = 1.0;
    for s in 0..20u64 {
        let a = clustering::ecg(&g, 16, 2 * s).unwrap();
        let b = clustering::ecg(&g, 16, 2 * s + 1).unwrap();
        worst = worst.min(clustering::rand_index(&a, &b).unwrap());
        assert!(clustering::modularity(&g, &a) >= 0.35);
    }
    assert!(worst >= 0.9, "lowest Rand index {worst}");
}

#[test]
fn ecg_and_louvain_are_reproducible() {
    let g = common::karate();
    assert_eq!(clustering::ecg(&g, 16, 5).unwrap(), clustering::ecg(&g, 16, 5).unwrap());
    assert_eq!(clustering::louvain(&g, 5).unwrap(), clustering::louvain(&g, 5).unwrap());
}

#[test]
fn fits_converge_quickly_on_karate() {
    let g = common::karate();
    let w = g.degree_sequence();
    let embeddings = [
        common::spectral_embedding(&g, 2),
        common::spectral_embedding(&g, 8),
        common::karate_embedding(&g, 0),
        synth::random_embedding(34, 16, 3).unwrap(),
    ];
    for e in &embeddings {
        for alpha in [0.0, 0.5, 2.75, 4.0, 10.0] {
            let (_, report) = fit_weights(&w, e, alpha, &FitParams::default()).unwrap();
            assert!(report.converged);
            assert!(report.iterations < 10_000, "alpha {alpha}: {} iterations", report.iterations);
        }
    }
}

#[test]
fn spectral_embedding_has_an_interior_optimum() {
    let g = common::karate();
    let p = clustering::ecg(&g, 16, seed::derive(0, seed::CLUSTERING, 0)).unwrap();
    let report = Scorer::new(&g, &p)
        .unwrap()
        .score(&common::spectral_embedding(&g, 2), &AlphaGrid::default(), &ScoreParams::default())
        .unwrap();
    assert_eq!(report.curve.len(), 41);
    assert!(report.best_alpha > 0.0 && report.best_alpha < 10.0, "{}", report.best_alpha);
    let at_zero = report.curve[0].terms.unwrap().delta;
    assert!(report.best_divergence < at_zero);
}

#[test]
fn good_embedding_beats_random_on_karate() {
    let g = common::karate();
    let p = clustering::ecg(&g, 16, 1).unwrap();
    let scorer = Scorer::new(&g, &p).unwrap();
    let grid = AlphaGrid::default();
    let params = ScoreParams::default();
    let spectral = scorer.score(&common::spectral_embedding(&g, 3), &grid, &params).unwrap();
    for s in 0..5 {
        let random = scorer
            .score(&synth::random_embedding(34, 3, s).unwrap(), &grid, &params)
            .unwrap();
        assert!(spectral.best_divergence < random.best_divergence);
    }
}

#[test]
fn alpha_zero_samples_average_the_edge_count() {
    let g = common::karate();
    let e = common::spectral_embedding(&g, 2);
    let (model, _) = fit_weights(&g.degree_sequence(), &e, 0.0, &FitParams::default()).unwrap();
    let samples = 100;
    let total: usize = (0..samples)
        .map(|i| model.sample_graph(seed::derive(7, seed::SAMPLING, i)).edge_count())
        .sum();
    let mean = total as f64 / samples as f64;
    assert!((mean - 78.0).abs() <= 5.0, "{mean}");
}
