//! Unsupervised comparison of graph embeddings.
//!
//! A graph is partitioned once (ECG or Louvain). For each embedding the
//! Geometric Chung-Lu model is fitted to the degree sequence over a grid of
//! decay strengths α, and the Jensen–Shannon divergence between observed and
//! expected cluster-block edge shares is minimised over α. Lower scores mean
//! the embedding explains the graph's community structure better.
//!
//! ```no_run
//! use embed_divergence::{clustering, divergence, embedding::Embedding, graph::Graph};
//!
//! let g = Graph::parse_edge_list(&std::fs::read_to_string("karate.edgelist")?, false)?;
//! let e = Embedding::parse(&std::fs::read_to_string("karate.emb")?, &g)?;
//! let p = clustering::ecg(&g, 16, 0)?;
//! let report = divergence::divergence_score(&g, &p, &e, &Default::default(), &Default::default())?;
//! println!("alpha = {}, score = {}", report.best_alpha, report.best_divergence);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

#![forbid(unsafe_code)]

pub mod cli;
pub mod clustering;
pub mod divergence;
pub mod embedding;
pub mod error;
pub mod gcl;
pub mod graph;
pub mod seed;
pub mod synth;

pub use error::{Error, Result};
