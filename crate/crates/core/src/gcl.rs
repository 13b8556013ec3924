//! The Geometric Chung-Lu model.
//!
//! Pair `(i, j)` is an edge with probability `p_ij = x_i x_j g(d_ij)` where
//! `g(d) = (1 - (d - d_min)/(d_max - d_min))^α`. The weights `x` are tuned so that
//! every vertex's expected degree matches its observed degree. At `α = 0` the
//! embedding is ignored and the model is loop-free Chung-Lu.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::clustering::Partition;
use crate::divergence::BlockVectors;
use crate::embedding::{DistanceExtremes, DistanceMatrix, Embedding};
use crate::error::{Error, Result};
use crate::graph::{DegreeVector, Graph};
use crate::seed;

/// Lower clip for `g`, keeping every pair affinity strictly positive.
pub const DEFAULT_G_FLOOR: f64 = 1e-7;
pub const DEFAULT_EPS: f64 = 0.1;
pub const DEFAULT_DELTA: f64 = 0.001;
pub const DEFAULT_MAX_ITER: usize = 100_000;
/// Consecutive residual increases after which the iteration is abandoned.
pub const DIVERGENCE_WINDOW: usize = 100;

const PAR_THRESHOLD: usize = 256;

/// Distance decay `g`, clipped from below at `g_floor`.
///
/// Returns 1 when `alpha == 0` or when all points coincide (`d_max == d_min`).
pub fn g_alpha(d: f64, ex: DistanceExtremes, alpha: f64, g_floor: f64) -> Result<f64> {
    let slack = 1e-12 * ex.d_max.max(1.0);
    if !(d >= ex.d_min - slack && d <= ex.d_max + slack) {
        return Err(Error::DistanceOutOfRange {
            d,
            d_min: ex.d_min,
            d_max: ex.d_max,
        });
    }
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!("alpha must be finite and >= 0, got {alpha}")));
    }
    Ok(decay(d, ex, alpha, g_floor))
}

#[inline]
fn decay(d: f64, ex: DistanceExtremes, alpha: f64, g_floor: f64) -> f64 {
    if alpha == 0.0 || ex.is_degenerate() {
        return 1.0;
    }
    let closeness = (1.0 - (d - ex.d_min) / (ex.d_max - ex.d_min)).clamp(0.0, 1.0);
    closeness.powf(alpha).max(g_floor)
}

/// Checks that the weight system has a unique positive solution: `n ≥ 3`, all
/// degrees positive, and the largest degree strictly below the sum of the others.
pub fn feasibility_check(w: &DegreeVector) -> Result<()> {
    let n = w.len();
    if n <= 2 {
        return Err(Error::Degenerate { n });
    }
    if let Some(vertex) = w.as_slice().iter().position(|&d| d == 0) {
        return Err(Error::ZeroDegree { vertex });
    }
    let total = w.total();
    let (vertex, &max) = w
        .as_slice()
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
        .expect("n >= 3");
    let rest = total - max;
    if max >= rest {
        return Err(Error::Infeasible {
            vertex,
            degree: max,
            rest,
        });
    }
    Ok(())
}

/// Dense symmetric matrix of `g(d_ij)` with a zero diagonal.
#[derive(Debug, Clone)]
pub struct Kernel {
    n: usize,
    alpha: f64,
    g_floor: f64,
    extremes: Option<DistanceExtremes>,
    values: Vec<f64>,
}

impl Kernel {
    pub fn new(distances: &DistanceMatrix, alpha: f64, g_floor: f64) -> Result<Self> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!("alpha must be finite and >= 0, got {alpha}")));
        }
        if !(g_floor > 0.0 && g_floor <= 1.0) {
            return Err(Error::InvalidParameter(format!("g floor must lie in (0, 1], got {g_floor}")));
        }
        let n = distances.vertex_count();
        let ex = distances.extremes();
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for (k, &d) in distances.row_tail(i).iter().enumerate() {
                let j = i + 1 + k;
                let g = decay(d, ex, alpha, g_floor);
                values[i * n + j] = g;
                values[j * n + i] = g;
            }
        }
        Ok(Kernel {
            n,
            alpha,
            g_floor,
            extremes: Some(ex),
            values,
        })
    }

    /// `g ≡ 1`: classic (loop-free) Chung-Lu.
    pub fn uniform(n: usize) -> Self {
        let mut values = vec![1.0; n * n];
        for i in 0..n {
            values[i * n + i] = 0.0;
        }
        Kernel {
            n,
            alpha: 0.0,
            g_floor: DEFAULT_G_FLOOR,
            extremes: None,
            values,
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn g_floor(&self) -> f64 {
        self.g_floor
    }

    pub fn extremes(&self) -> Option<DistanceExtremes> {
        self.extremes
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    /// `s_i = t_i Σ_j g_ij t_j`, rows in parallel for large `n`.
    fn expected_degrees_into(&self, t: &[f64], out: &mut [f64]) {
        let row_sum = |i: usize| -> f64 {
            let dot: f64 = self.row(i).iter().zip(t).map(|(g, x)| g * x).sum();
            t[i] * dot
        };
        if self.n >= PAR_THRESHOLD {
            out.par_iter_mut().enumerate().for_each(|(i, s)| *s = row_sum(i));
        } else {
            out.iter_mut().enumerate().for_each(|(i, s)| *s = row_sum(i));
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitParams {
    pub eps: f64,
    pub delta: f64,
    pub max_iter: usize,
}

impl Default for FitParams {
    fn default() -> Self {
        FitParams {
            eps: DEFAULT_EPS,
            delta: DEFAULT_DELTA,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

impl FitParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::InvalidParameter(format!("eps must lie in (0, 1), got {}", self.eps)));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::InvalidParameter(format!("delta must be positive, got {}", self.delta)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitReport {
    pub iterations: usize,
    pub final_residual: f64,
    pub converged: bool,
}

/// Fitted weights over a kernel.
#[derive(Debug, Clone)]
pub struct GclModel {
    kernel: Kernel,
    weights: Vec<f64>,
    residual: f64,
    capped_pairs: usize,
}

#[derive(Serialize)]
struct ModelJson<'a> {
    alpha: f64,
    d_min: Option<f64>,
    d_max: Option<f64>,
    weights: &'a [f64],
    residual: f64,
}

impl GclModel {
    /// Wraps given weights without fitting. `residual` is measured against `target`.
    pub fn from_weights(kernel: Kernel, weights: Vec<f64>, target: &DegreeVector) -> Result<Self> {
        if weights.len() != kernel.n {
            return Err(Error::LengthMismatch(weights.len(), kernel.n));
        }
        if target.len() != kernel.n {
            return Err(Error::LengthMismatch(target.len(), kernel.n));
        }
        if let Some(i) = weights.iter().position(|&x| !(x > 0.0 && x.is_finite())) {
            return Err(Error::InvalidParameter(format!("weight {i} is not positive")));
        }
        let mut s = vec![0.0; kernel.n];
        kernel.expected_degrees_into(&weights, &mut s);
        let residual = max_residual(&target.to_f64(), &s);
        Ok(Self::assemble(kernel, weights, residual))
    }

    fn assemble(kernel: Kernel, weights: Vec<f64>, residual: f64) -> Self {
        let n = kernel.n;
        let mut capped_pairs = 0;
        for i in 0..n {
            for j in i + 1..n {
                if weights[i] * weights[j] * kernel.get(i, j) > 1.0 {
                    capped_pairs += 1;
                }
            }
        }
        if capped_pairs > 0 {
            log::warn!(
                "alpha = {}: {capped_pairs} pair probabilities exceed 1 and are capped",
                kernel.alpha
            );
        }
        GclModel {
            kernel,
            weights,
            residual,
            capped_pairs,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.kernel.alpha
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn vertex_count(&self) -> usize {
        self.kernel.n
    }

    /// Max degree residual of the uncapped weights.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// Number of pairs whose raw product `x_i x_j g_ij` exceeded 1.
    pub fn capped_pairs(&self) -> usize {
        self.capped_pairs
    }

    #[inline]
    fn p(&self, i: usize, j: usize) -> f64 {
        (self.weights[i] * self.weights[j] * self.kernel.get(i, j)).min(1.0)
    }

    /// `min(1, x_i x_j g(d_ij))`.
    pub fn edge_probability(&self, i: usize, j: usize) -> Result<f64> {
        if i == j {
            return Err(Error::InvalidParameter(format!("no loops: pair ({i}, {i})")));
        }
        if i >= self.kernel.n || j >= self.kernel.n {
            return Err(Error::InvalidParameter(format!("pair ({i}, {j}) out of range")));
        }
        Ok(self.p(i, j))
    }

    /// Uncapped expected degrees `x_i Σ_j x_j g_ij`.
    pub fn expected_degrees(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.kernel.n];
        self.kernel.expected_degrees_into(&self.weights, &mut s);
        s
    }

    /// Expected share of edges inside each cluster and between each cluster pair,
    /// normalized by the total expected edge count.
    pub fn expected_block_proportions(&self, p: &Partition) -> Result<BlockVectors> {
        p.check_vertex_count(self.kernel.n)?;
        let l = p.cluster_count();
        if l == 0 {
            return Err(Error::InvalidPartition("partition has no clusters".into()));
        }
        let n = self.kernel.n;
        const ROWS_PER_CHUNK: usize = 64;
        let partials: Vec<Vec<f64>> = (0..n.div_ceil(ROWS_PER_CHUNK))
            .into_par_iter()
            .map(|chunk| {
                let mut acc = vec![0.0; l * l];
                for i in chunk * ROWS_PER_CHUNK..((chunk + 1) * ROWS_PER_CHUNK).min(n) {
                    let ci = p.cluster_of(i);
                    for j in i + 1..n {
                        let cj = p.cluster_of(j);
                        let (a, b) = if ci <= cj { (ci, cj) } else { (cj, ci) };
                        acc[a * l + b] += self.p(i, j);
                    }
                }
                acc
            })
            .collect();
        // chunks are fixed, so the reduction order does not depend on scheduling
        let mut totals = vec![0.0; l * l];
        for partial in &partials {
            for (t, x) in totals.iter_mut().zip(partial) {
                *t += x;
            }
        }
        BlockVectors::from_block_matrix(&totals, l)
    }

    /// One random graph: each pair independently with probability `p_ij`.
    pub fn sample_graph(&self, seed: u64) -> Graph {
        let mut rng = seed::rng(seed);
        let n = self.kernel.n;
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.random::<f64>() < self.p(i, j) {
                    edges.push((i, j));
                }
            }
        }
        Graph::from_index_edges(n, edges).expect("indices in range")
    }

    /// `{"alpha":…, "d_min":…, "d_max":…, "weights":[…], "residual":…}`.
    pub fn to_json(&self) -> String {
        let ex = self.kernel.extremes;
        serde_json::to_string_pretty(&ModelJson {
            alpha: self.kernel.alpha,
            d_min: ex.map(|e| e.d_min),
            d_max: ex.map(|e| e.d_max),
            weights: &self.weights,
            residual: self.residual,
        })
        .expect("model json serialization")
    }
}

fn max_residual(w: &[f64], s: &[f64]) -> f64 {
    w.iter().zip(s).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

/// Fits weights for `embedding` at decay strength `alpha`, starting from all ones.
pub fn fit_weights(
    w: &DegreeVector,
    embedding: &Embedding,
    alpha: f64,
    params: &FitParams,
) -> Result<(GclModel, FitReport)> {
    feasibility_check(w)?;
    params.validate()?;
    if embedding.vertex_count() != w.len() {
        return Err(Error::LengthMismatch(embedding.vertex_count(), w.len()));
    }
    let kernel = Kernel::new(&DistanceMatrix::new(embedding)?, alpha, DEFAULT_G_FLOOR)?;
    fit_kernel(w, kernel, params, None)
}

/// Damped multiplicative fixed-point iteration
/// `t_i ← t_i + ε t_i (w_i / s_i − 1)`, all `s_i` taken from the previous `t`.
///
/// Stops once `max_i |w_i − s_i| < δ`. Gives up after `max_iter` updates or
/// after the residual grows [`DIVERGENCE_WINDOW`] times in a row.
pub fn fit_kernel(
    w: &DegreeVector,
    kernel: Kernel,
    params: &FitParams,
    init: Option<&[f64]>,
) -> Result<(GclModel, FitReport)> {
    feasibility_check(w)?;
    params.validate()?;
    let n = w.len();
    if kernel.n != n {
        return Err(Error::LengthMismatch(kernel.n, n));
    }
    let target = w.to_f64();
    let mut t = match init {
        Some(x) if x.len() != n => return Err(Error::LengthMismatch(x.len(), n)),
        Some(x) if x.iter().any(|&v| !(v > 0.0 && v.is_finite())) => {
            return Err(Error::InvalidParameter("initial weights must be positive".into()))
        }
        Some(x) => x.to_vec(),
        None => vec![1.0; n],
    };
    let mut s = vec![0.0; n];
    let mut trace = Vec::new();
    let mut growing = 0;
    let mut iter = 0;
    loop {
        kernel.expected_degrees_into(&t, &mut s);
        let residual = max_residual(&target, &s);
        trace.push(residual);
        if residual < params.delta {
            let report = FitReport {
                iterations: iter,
                final_residual: residual,
                converged: true,
            };
            return Ok((GclModel::assemble(kernel, t, residual), report));
        }
        if trace.len() >= 2 && residual > trace[trace.len() - 2] {
            growing += 1;
        } else {
            growing = 0;
        }
        if iter >= params.max_iter || growing >= DIVERGENCE_WINDOW || !residual.is_finite() {
            return Err(Error::NonConvergence {
                iterations: iter,
                residual,
                trace,
            });
        }
        for ((ti, &wi), &si) in t.iter_mut().zip(&target).zip(&s) {
            *ti += params.eps * *ti * (wi / si - 1.0);
        }
        iter += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex(d_min: f64, d_max: f64) -> DistanceExtremes {
        DistanceExtremes { d_min, d_max }
    }

    fn complete_degrees(n: usize) -> DegreeVector {
        DegreeVector::new(vec![n as u64 - 1; n])
    }

    #[test]
    fn decay_examples() {
        let e = ex(1.0, 3.0);
        for alpha in [0.0, 0.5, 2.0, 9.0] {
            assert_eq!(g_alpha(1.0, e, alpha, DEFAULT_G_FLOOR).unwrap(), 1.0);
            assert_eq!(g_alpha(2.4, e, 0.0, DEFAULT_G_FLOOR).unwrap(), 1.0);
        }
        assert_eq!(g_alpha(3.0, e, 0.0, DEFAULT_G_FLOOR).unwrap(), 1.0);
        assert!((g_alpha(2.0, e, 2.0, DEFAULT_G_FLOOR).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(g_alpha(3.0, e, 2.0, DEFAULT_G_FLOOR).unwrap(), DEFAULT_G_FLOOR);
        assert_eq!(g_alpha(0.0, ex(0.0, 0.0), 5.0, DEFAULT_G_FLOOR).unwrap(), 1.0);
        assert!(matches!(
            g_alpha(3.5, e, 1.0, DEFAULT_G_FLOOR),
            Err(Error::DistanceOutOfRange { .. })
        ));
        assert!(g_alpha(0.5, e, 1.0, DEFAULT_G_FLOOR).is_err());
        assert!(g_alpha(2.0, e, -1.0, DEFAULT_G_FLOOR).is_err());
    }

    #[test]
    fn feasibility_examples() {
        assert!(matches!(
            feasibility_check(&DegreeVector::new(vec![4, 1, 1, 1, 1])),
            Err(Error::Infeasible { vertex: 0, degree: 4, rest: 4 })
        ));
        assert!(feasibility_check(&DegreeVector::new(vec![2, 2, 2])).is_ok());
        assert!(matches!(
            feasibility_check(&DegreeVector::new(vec![1, 1])),
            Err(Error::Degenerate { n: 2 })
        ));
        assert!(matches!(
            feasibility_check(&DegreeVector::new(vec![2, 2, 2, 0])),
            Err(Error::ZeroDegree { vertex: 3 })
        ));
    }

    #[test]
    fn complete_graph_fits_unit_weights() {
        let (model, report) = fit_kernel(&complete_degrees(4), Kernel::uniform(4), &FitParams::default(), None).unwrap();
        assert!(report.converged && report.final_residual < DEFAULT_DELTA);
        for &x in model.weights() {
            assert!((x - 1.0).abs() < 1e-3);
        }
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    assert!((model.edge_probability(i, j).unwrap() - 1.0).abs() < 2e-3);
                }
            }
        }
        assert!(model.edge_probability(2, 2).is_err());
    }

    #[test]
    fn converged_model_preserves_degrees() {
        let w = DegreeVector::new(vec![3, 2, 2, 1, 4, 2]);
        let e = Embedding::from_rows(&[
            vec![0.0, 0.0],
            vec![1.0, 0.2],
            vec![0.3, 2.0],
            vec![3.0, 3.0],
            vec![0.5, 0.5],
            vec![2.0, 0.0],
        ])
        .unwrap();
        for alpha in [0.0, 1.0, 3.0] {
            let (model, report) = fit_weights(&w, &e, alpha, &FitParams::default()).unwrap();
            assert!(report.converged);
            let s = model.expected_degrees();
            for (si, wi) in s.iter().zip(w.to_f64()) {
                assert!((si - wi).abs() < DEFAULT_DELTA);
            }
            assert_eq!(report.final_residual, model.residual());
        }
    }

    #[test]
    fn star_is_rejected_before_iterating() {
        let w = DegreeVector::new(vec![3, 1, 1, 1]);
        let err = fit_kernel(&w, Kernel::uniform(4), &FitParams::default(), None).unwrap_err();
        assert!(err.is_infeasible());
    }

    #[test]
    fn non_convergence_reports_trace() {
        let params = FitParams {
            max_iter: 3,
            delta: 1e-12,
            ..FitParams::default()
        };
        match fit_kernel(&DegreeVector::new(vec![3, 2, 2, 1, 4, 2]), Kernel::uniform(6), &params, None) {
            Err(Error::NonConvergence { iterations, trace, .. }) => {
                assert_eq!(iterations, 3);
                assert_eq!(trace.len(), 4);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_params_rejected() {
        let w = complete_degrees(4);
        for params in [
            FitParams { eps: 0.0, ..FitParams::default() },
            FitParams { eps: 1.0, ..FitParams::default() },
            FitParams { delta: 0.0, ..FitParams::default() },
        ] {
            assert!(fit_kernel(&w, Kernel::uniform(4), &params, None).is_err());
        }
        assert!(fit_kernel(&w, Kernel::uniform(4), &FitParams::default(), Some(&[1.0, -1.0, 1.0, 1.0])).is_err());
    }

    #[test]
    fn path_weights_give_hand_computed_probabilities() {
        // weights (1/√2, √2, 1/√2) with g ≡ 1
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let model = GclModel::from_weights(
            Kernel::uniform(3),
            vec![r, 2f64.sqrt(), r],
            &DegreeVector::new(vec![1, 2, 1]),
        )
        .unwrap();
        assert!((model.edge_probability(0, 1).unwrap() - 1.0).abs() < 1e-12);
        assert!((model.edge_probability(0, 2).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(model.edge_probability(1, 2).unwrap(), model.edge_probability(2, 1).unwrap());
        let b = model
            .expected_block_proportions(&Partition::new(vec![0, 0, 1]).unwrap())
            .unwrap();
        assert!((b.internal[0] - 0.4).abs() < 1e-12);
        assert!(b.internal[1].abs() < 1e-12);
        assert!((b.external[0] - 0.6).abs() < 1e-12);
        // these weights overshoot the endpoints' degrees: s_a = 1.5
        assert!((model.residual() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn block_proportions_on_k4() {
        let model = GclModel::from_weights(Kernel::uniform(4), vec![1.0; 4], &complete_degrees(4)).unwrap();
        let b = model
            .expected_block_proportions(&Partition::new(vec![0, 0, 1, 1]).unwrap())
            .unwrap();
        assert!((b.internal[0] - 1.0 / 6.0).abs() < 1e-12);
        assert!((b.internal[1] - 1.0 / 6.0).abs() < 1e-12);
        assert!((b.external[0] - 4.0 / 6.0).abs() < 1e-12);
        let whole = model.expected_block_proportions(&Partition::whole(4)).unwrap();
        assert_eq!(whole.internal, vec![1.0]);
        assert!(whole.external.is_empty());
    }

    #[test]
    fn sampling_k4_gives_k4() {
        let model = GclModel::from_weights(Kernel::uniform(4), vec![1.0; 4], &complete_degrees(4)).unwrap();
        let g = model.sample_graph(5);
        assert_eq!(g.edge_count(), 6);
        assert_eq!(model.sample_graph(11), model.sample_graph(11));
    }

    #[test]
    fn model_json_fields() {
        let model = GclModel::from_weights(Kernel::uniform(4), vec![1.0; 4], &complete_degrees(4)).unwrap();
        let v: serde_json::Value = serde_json::from_str(&model.to_json()).unwrap();
        for key in ["alpha", "d_min", "d_max", "weights", "residual"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["weights"].as_array().unwrap().len(), 4);
    }
}
