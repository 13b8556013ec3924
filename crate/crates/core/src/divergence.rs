//! Divergence scores for embeddings.
//!
//! The observed graph and the fitted model are both summarised by the share of
//! edges inside each cluster (`internal`, length ℓ) and between each pair of
//! clusters (`external`, length ℓ(ℓ−1)/2, pairs in row-major order
//! (0,1), (0,2), …, (ℓ−2,ℓ−1)). For one decay strength α,
//!
//! ```text
//! Δ_α = w · JSD(ĉ, b̂(α)) + (1 − w) · JSD(c̄, b̄(α))
//! ```
//!
//! The two half-vectors are not distributions on their own (only together do
//! they sum to 1). By default JSD is evaluated on them as they stand, summing
//! the pointwise terms, so with `w = ½` the score is half the JSD of the full
//! block distributions and a model that gets the internal/external split wrong
//! is penalized. [`HalfVectors::Renormalized`] rescales each half to a
//! distribution first instead. The score of an embedding is the smallest Δ_α
//! over a grid of α values; lower is better.

use std::collections::HashMap;
use std::hash::Hash;

use rayon::prelude::*;
use serde::Serialize;

use crate::clustering::Partition;
use crate::embedding::{DistanceMatrix, Embedding};
use crate::error::{Error, Result};
use crate::gcl::{self, FitParams, FitReport, Kernel};
use crate::graph::{DegreeVector, Graph};

const NORMALIZATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct BlockVectors {
    pub internal: Vec<f64>,
    pub external: Vec<f64>,
}

/// Position of cluster pair `(a, b)`, `a < b`, in the external vector.
pub fn pair_index(a: usize, b: usize, clusters: usize) -> usize {
    debug_assert!(a < b && b < clusters);
    a * (2 * clusters - a - 1) / 2 + (b - a - 1)
}

impl BlockVectors {
    /// Builds normalized vectors from an `l × l` matrix whose upper triangle
    /// (diagonal included) holds block masses.
    pub fn from_block_matrix(blocks: &[f64], l: usize) -> Result<Self> {
        let total: f64 = (0..l).flat_map(|a| (a..l).map(move |b| (a, b))).map(|(a, b)| blocks[a * l + b]).sum();
        if total.is_nan() || total <= 0.0 {
            return Err(Error::InvalidParameter("block masses sum to zero".into()));
        }
        let internal = (0..l).map(|a| blocks[a * l + a] / total).collect();
        let external = (0..l)
            .flat_map(|a| (a + 1..l).map(move |b| (a, b)))
            .map(|(a, b)| blocks[a * l + b] / total)
            .collect();
        Ok(BlockVectors { internal, external })
    }

    pub fn cluster_count(&self) -> usize {
        self.internal.len()
    }

    pub fn total(&self) -> f64 {
        self.internal.iter().sum::<f64>() + self.external.iter().sum::<f64>()
    }
}

/// Share of `g`'s edges inside and between clusters.
pub fn observed_block_proportions(g: &Graph, p: &Partition) -> Result<BlockVectors> {
    p.check_vertex_count(g.vertex_count())?;
    if g.edge_count() == 0 {
        return Err(Error::EdgelessGraph);
    }
    let l = p.cluster_count();
    let mut blocks = vec![0.0; l * l];
    for (u, v) in g.edges() {
        let (a, b) = (p.cluster_of(u), p.cluster_of(v));
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        blocks[a * l + b] += 1.0;
    }
    BlockVectors::from_block_matrix(&blocks, l)
}

fn check_distribution(p: &[f64]) -> Result<()> {
    if let Some(idx) = p.iter().position(|&x| x.is_nan() || x < 0.0) {
        return Err(Error::NegativeEntry { idx, value: p[idx] });
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(Error::NotNormalized { sum });
    }
    Ok(())
}

/// Jensen–Shannon divergence in bits, in `[0, 1]`.
pub fn jsd(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch(p.len(), q.len()));
    }
    check_distribution(p)?;
    check_distribution(q)?;
    let mut total = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        let m = 0.5 * (a + b);
        if a > 0.0 {
            total += 0.5 * a * (a / m).log2();
        }
        if b > 0.0 {
            total += 0.5 * b * (b / m).log2();
        }
    }
    Ok(total.clamp(0.0, 1.0))
}

/// How the internal and external half-vectors enter JSD.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HalfVectors {
    /// Pointwise JSD terms summed over each half as given. Each term lies in
    /// `[0, (mass_c + mass_b) / 2]`; the two terms add up to the full JSD.
    #[default]
    Raw,
    /// Each half rescaled to sum 1 before JSD; each term lies in `[0, 1]`.
    Renormalized,
}

fn check_half(v: &[f64]) -> Result<()> {
    if let Some(idx) = v.iter().position(|&x| !(x >= 0.0 && x.is_finite())) {
        return Err(Error::NegativeEntry { idx, value: v[idx] });
    }
    Ok(())
}

/// `Σ_k ½ p_k log₂(p_k/m_k) + ½ q_k log₂(q_k/m_k)` with `m = (p+q)/2`, for
/// non-negative vectors of any mass.
fn raw_half_jsd(observed: &[f64], model: &[f64]) -> Result<f64> {
    if observed.len() != model.len() {
        return Err(Error::LengthMismatch(observed.len(), model.len()));
    }
    check_half(observed)?;
    check_half(model)?;
    let mut total = 0.0;
    for (&a, &b) in observed.iter().zip(model) {
        let m = 0.5 * (a + b);
        if a > 0.0 {
            total += 0.5 * a * (a / m).log2();
        }
        if b > 0.0 {
            total += 0.5 * b * (b / m).log2();
        }
    }
    Ok(total.max(0.0))
}

/// JSD between two half-vectors after renormalizing each to sum 1.
///
/// An empty or all-zero pair contributes 0; all-zero against non-zero mass is
/// maximally different (1).
fn renormalized_half_jsd(observed: &[f64], model: &[f64]) -> Result<f64> {
    if observed.len() != model.len() {
        return Err(Error::LengthMismatch(observed.len(), model.len()));
    }
    check_half(observed)?;
    check_half(model)?;
    let so: f64 = observed.iter().sum();
    let sm: f64 = model.iter().sum();
    match (so > 0.0, sm > 0.0) {
        (false, false) => Ok(0.0),
        (true, false) | (false, true) => Ok(1.0),
        (true, true) => {
            let p: Vec<f64> = observed.iter().map(|x| x / so).collect();
            let q: Vec<f64> = model.iter().map(|x| x / sm).collect();
            jsd(&p, &q)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeltaTerms {
    pub delta: f64,
    pub jsd_internal: f64,
    pub jsd_external: f64,
}

/// Weighted average of the internal and external divergences between
/// observed (`c`) and expected (`b`) block vectors, each half renormalized.
pub fn delta_alpha(c: &BlockVectors, b: &BlockVectors, internal_weight: f64) -> Result<DeltaTerms> {
    delta_terms(c, b, internal_weight, HalfVectors::Renormalized)
}

/// [`delta_alpha`] with a choice of half-vector treatment.
pub fn delta_terms(c: &BlockVectors, b: &BlockVectors, internal_weight: f64, halves: HalfVectors) -> Result<DeltaTerms> {
    if !(0.0..=1.0).contains(&internal_weight) {
        return Err(Error::InvalidParameter(format!(
            "internal weight must lie in [0, 1], got {internal_weight}"
        )));
    }
    if c.cluster_count() != b.cluster_count() {
        return Err(Error::LengthMismatch(c.cluster_count(), b.cluster_count()));
    }
    let half = match halves {
        HalfVectors::Raw => raw_half_jsd,
        HalfVectors::Renormalized => renormalized_half_jsd,
    };
    let jsd_internal = half(&c.internal, &b.internal)?;
    let jsd_external = half(&c.external, &b.external)?;
    Ok(DeltaTerms {
        delta: internal_weight * jsd_internal + (1.0 - internal_weight) * jsd_external,
        jsd_internal,
        jsd_external,
    })
}

/// Strictly increasing list of decay strengths.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaGrid(Vec<f64>);

impl AlphaGrid {
    /// `min, min + step, …` up to `max` (included when it lands on the grid).
    pub fn range(min: f64, max: f64, step: f64) -> Result<Self> {
        if !(min >= 0.0 && max >= min && step > 0.0 && max.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "alpha grid needs 0 <= min <= max and step > 0 (got {min}, {max}, {step})"
            )));
        }
        let count = ((max - min) / step + 1e-9).floor() as usize + 1;
        Ok(AlphaGrid((0..count).map(|i| min + i as f64 * step).collect()))
    }

    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter("alpha grid is empty".into()));
        }
        if values.iter().any(|&a| !(a >= 0.0 && a.is_finite())) {
            return Err(Error::InvalidParameter("alpha values must be finite and >= 0".into()));
        }
        if values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("alpha grid must be strictly increasing".into()));
        }
        Ok(AlphaGrid(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

impl Default for AlphaGrid {
    /// 0, 0.25, …, 10 (41 points).
    fn default() -> Self {
        AlphaGrid::range(0.0, 10.0, 0.25).expect("default grid")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreParams {
    pub fit: FitParams,
    pub internal_weight: f64,
    pub halves: HalfVectors,
    pub g_floor: f64,
}

impl Default for ScoreParams {
    fn default() -> Self {
        ScoreParams {
            fit: FitParams::default(),
            internal_weight: 0.5,
            halves: HalfVectors::Raw,
            g_floor: gcl::DEFAULT_G_FLOOR,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CurvePoint {
    pub alpha: f64,
    /// `None` when the fit at this α failed.
    pub terms: Option<DeltaTerms>,
    pub fit: FitReport,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct ScoreReport {
    pub best_alpha: f64,
    pub best_divergence: f64,
    pub curve: Vec<CurvePoint>,
}

#[derive(Serialize)]
struct CurveJson {
    alpha: f64,
    delta: Option<f64>,
    jsd_internal: Option<f64>,
    jsd_external: Option<f64>,
    fit_iters: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Serialize)]
struct ReportJson<'a> {
    embedding: &'a str,
    best_alpha: f64,
    divergence: f64,
    curve: Vec<CurveJson>,
}

impl ScoreReport {
    pub fn fit_reports(&self) -> impl Iterator<Item = &FitReport> {
        self.curve.iter().map(|c| &c.fit)
    }

    pub fn to_json(&self, embedding: &str) -> String {
        let curve = self
            .curve
            .iter()
            .map(|c| CurveJson {
                alpha: c.alpha,
                delta: c.terms.map(|t| t.delta),
                jsd_internal: c.terms.map(|t| t.jsd_internal),
                jsd_external: c.terms.map(|t| t.jsd_external),
                fit_iters: c.fit.iterations,
                error: c.error.clone(),
            })
            .collect();
        serde_json::to_string_pretty(&ReportJson {
            embedding,
            best_alpha: self.best_alpha,
            divergence: self.best_divergence,
            curve,
        })
        .expect("report json serialization")
    }

    /// Plot-ready curve: `alpha,delta,jsd_internal,jsd_external,fit_iters,fit_residual`.
    pub fn curve_csv(&self) -> String {
        let mut out = String::from("alpha,delta,jsd_internal,jsd_external,fit_iters,fit_residual\n");
        for c in &self.curve {
            let field = |x: Option<f64>| x.map_or(String::new(), |v| v.to_string());
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                c.alpha,
                field(c.terms.map(|t| t.delta)),
                field(c.terms.map(|t| t.jsd_internal)),
                field(c.terms.map(|t| t.jsd_external)),
                c.fit.iterations,
                c.fit.final_residual
            ));
        }
        out
    }
}

/// Graph-side state shared by every embedding scored against one partition:
/// the degree sequence and the observed block vectors.
#[derive(Debug, Clone)]
pub struct Scorer<'a> {
    graph: &'a Graph,
    partition: &'a Partition,
    degrees: DegreeVector,
    observed: BlockVectors,
}

impl<'a> Scorer<'a> {
    pub fn new(graph: &'a Graph, partition: &'a Partition) -> Result<Self> {
        let degrees = graph.degree_sequence();
        gcl::feasibility_check(&degrees)?;
        let observed = observed_block_proportions(graph, partition)?;
        Ok(Scorer {
            graph,
            partition,
            degrees,
            observed,
        })
    }

    pub fn observed(&self) -> &BlockVectors {
        &self.observed
    }

    pub fn degrees(&self) -> &DegreeVector {
        &self.degrees
    }

    fn evaluate(&self, distances: &DistanceMatrix, alpha: f64, params: &ScoreParams) -> Result<(DeltaTerms, FitReport)> {
        let kernel = Kernel::new(distances, alpha, params.g_floor)?;
        let (model, report) = gcl::fit_kernel(&self.degrees, kernel, &params.fit, None)?;
        let expected = model.expected_block_proportions(self.partition)?;
        let terms = delta_terms(&self.observed, &expected, params.internal_weight, params.halves)?;
        Ok((terms, report))
    }

    /// Fits the model at every α of the grid and keeps the smallest Δ_α
    /// (ties go to the smaller α).
    pub fn score(&self, embedding: &Embedding, grid: &AlphaGrid, params: &ScoreParams) -> Result<ScoreReport> {
        params.fit.validate()?;
        if embedding.vertex_count() != self.graph.vertex_count() {
            return Err(Error::LengthMismatch(embedding.vertex_count(), self.graph.vertex_count()));
        }
        let distances = DistanceMatrix::new(embedding)?;
        let outcomes: Vec<Result<(DeltaTerms, FitReport)>> = grid
            .values()
            .par_iter()
            .map(|&alpha| self.evaluate(&distances, alpha, params))
            .collect();

        let mut curve = Vec::with_capacity(outcomes.len());
        let mut best: Option<(f64, f64)> = None;
        let mut first_error = None;
        for (&alpha, outcome) in grid.values().iter().zip(outcomes) {
            match outcome {
                Ok((terms, fit)) => {
                    if best.is_none_or(|(_, d)| terms.delta < d) {
                        best = Some((alpha, terms.delta));
                    }
                    curve.push(CurvePoint {
                        alpha,
                        terms: Some(terms),
                        fit,
                        error: None,
                    });
                }
                Err(err) => {
                    let fit = match &err {
                        Error::NonConvergence { iterations, residual, .. } => FitReport {
                            iterations: *iterations,
                            final_residual: *residual,
                            converged: false,
                        },
                        _ => FitReport {
                            iterations: 0,
                            final_residual: f64::NAN,
                            converged: false,
                        },
                    };
                    log::warn!("alpha = {alpha}: {err}");
                    curve.push(CurvePoint {
                        alpha,
                        terms: None,
                        fit,
                        error: Some(err.to_string()),
                    });
                    first_error.get_or_insert(err);
                }
            }
        }
        match best {
            Some((best_alpha, best_divergence)) => Ok(ScoreReport {
                best_alpha,
                best_divergence,
                curve,
            }),
            None => Err(Error::AllAlphaFailed(Box::new(
                first_error.unwrap_or(Error::InvalidParameter("empty alpha grid".into())),
            ))),
        }
    }
}

/// Scores one embedding. For several embeddings build a [`Scorer`] once instead.
pub fn divergence_score(
    g: &Graph,
    p: &Partition,
    e: &Embedding,
    grid: &AlphaGrid,
    params: &ScoreParams,
) -> Result<ScoreReport> {
    Scorer::new(g, p)?.score(e, grid, params)
}

#[derive(Debug)]
pub struct Ranking {
    /// Best (lowest divergence) first.
    pub entries: Vec<(String, ScoreReport)>,
    pub failures: Vec<(String, Error)>,
}

impl Ranking {
    pub fn ids(&self) -> Vec<&str> {
        self.entries.iter().map(|(id, _)| id.as_str()).collect()
    }

    /// `rank,embedding,best_alpha,divergence`, ranks starting at 1.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("rank,embedding,best_alpha,divergence\n");
        for (rank, (id, report)) in self.entries.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                rank + 1,
                id,
                report.best_alpha,
                report.best_divergence
            ));
        }
        out
    }
}

/// Scores every embedding against the same partition and sorts ascending by
/// divergence, ties kept in input order. Embeddings whose scoring fails are
/// listed in `failures`.
pub fn rank_embeddings(
    g: &Graph,
    p: &Partition,
    embeddings: &[(String, Embedding)],
    grid: &AlphaGrid,
    params: &ScoreParams,
) -> Result<Ranking> {
    if embeddings.is_empty() {
        return Err(Error::InvalidParameter("no embeddings to rank".into()));
    }
    let scorer = Scorer::new(g, p)?;
    let mut entries = Vec::new();
    let mut failures = Vec::new();
    for (id, e) in embeddings {
        match scorer.score(e, grid, params) {
            Ok(report) => entries.push((id.clone(), report)),
            Err(err) => failures.push((id.clone(), err)),
        }
    }
    entries.sort_by(|a, b| a.1.best_divergence.total_cmp(&b.1.best_divergence));
    Ok(Ranking { entries, failures })
}

/// Kendall tau-a between two rankings of the same ids (no ties).
pub fn kendall_tau<T: Eq + Hash>(order_a: &[T], order_b: &[T]) -> Result<f64> {
    let n = order_a.len();
    if n != order_b.len() {
        return Err(Error::RankMismatch);
    }
    if n < 2 {
        return Err(Error::InvalidParameter("kendall tau needs at least two ids".into()));
    }
    let mut position_b: HashMap<&T, usize> = HashMap::with_capacity(n);
    for (i, id) in order_b.iter().enumerate() {
        if position_b.insert(id, i).is_some() {
            return Err(Error::RankMismatch);
        }
    }
    let ranks: Vec<usize> = order_a
        .iter()
        .map(|id| position_b.get(id).copied().ok_or(Error::RankMismatch))
        .collect::<Result<_>>()?;
    let mut seen = std::collections::HashSet::with_capacity(n);
    if !order_a.iter().all(|id| seen.insert(id)) {
        return Err(Error::RankMismatch);
    }
    let mut score: i64 = 0;
    for i in 0..n {
        for j in i + 1..n {
            score += if ranks[i] < ranks[j] { 1 } else { -1 };
        }
    }
    Ok(score as f64 / (n * (n - 1) / 2) as f64)
}
