//! Vertex embeddings, Euclidean distances and their extremes.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::Graph;

/// `n × dim` coordinates, rows aligned with a graph's internal vertex indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    dim: usize,
    coords: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceExtremes {
    pub d_min: f64,
    pub d_max: f64,
}

impl DistanceExtremes {
    pub fn is_degenerate(&self) -> bool {
        self.d_max == self.d_min
    }
}

impl Embedding {
    /// `coords` is row-major with `dim` entries per vertex.
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("embedding dimension must be positive".into()));
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(Error::InvalidParameter(format!(
                "{} coordinates do not split into rows of {dim}",
                coords.len()
            )));
        }
        if let Some(idx) = coords.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "coordinate {} of vertex {} is not finite",
                idx % dim,
                idx / dim
            )));
        }
        Ok(Embedding { dim, coords })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch {
                label: bad.to_string(),
                expected: dim,
                found: rows[bad].len(),
            });
        }
        Self::new(dim, rows.concat())
    }

    /// Parses node2vec-style output: an optional `n k` header, then
    /// `label c_1 … c_k` per line. Rows are reordered to `g`'s vertex order;
    /// labels absent from `g` are skipped.
    pub fn parse(text: &str, g: &Graph) -> Result<Self> {
        let lines: Vec<(usize, Vec<&str>)> = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
            .map(|(i, l)| (i, l.split_whitespace().collect()))
            .collect();
        let mut body = &lines[..];
        let mut dim = None;
        if let Some((_, first)) = lines.first() {
            if let Some(k) = header_dim(first, &lines[1..]) {
                dim = Some(k);
                body = &lines[1..];
            }
        }

        let mut rows: HashMap<&str, Vec<f64>> = HashMap::with_capacity(body.len());
        for (lineno, tokens) in body {
            let label = tokens[0];
            let k = *dim.get_or_insert(tokens.len() - 1);
            if tokens.len() - 1 != k {
                return Err(Error::DimensionMismatch {
                    label: label.to_owned(),
                    expected: k,
                    found: tokens.len() - 1,
                });
            }
            let row = tokens[1..]
                .iter()
                .map(|t| {
                    t.parse::<f64>().map_err(|_| Error::Parse {
                        line: *lineno,
                        message: format!("coordinate `{t}` of vertex {label} is not a number"),
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            if rows.insert(label, row).is_some() {
                return Err(Error::DuplicateVertex { label: label.to_owned() });
            }
        }
        let dim = dim.unwrap_or(0);
        if dim == 0 {
            return Err(Error::InvalidParameter("embedding has no coordinates".into()));
        }
        let mut coords = Vec::with_capacity(g.vertex_count() * dim);
        for label in g.labels() {
            match rows.get(label.as_str()) {
                Some(row) => coords.extend_from_slice(row),
                None => return Err(Error::MissingEmbedding { label: label.clone() }),
            }
        }
        Self::new(dim, coords)
    }

    /// node2vec text format with header, labels taken from `g`.
    pub fn to_text(&self, g: &Graph) -> String {
        let mut out = format!("{} {}\n", self.vertex_count(), self.dim);
        for v in 0..self.vertex_count() {
            out.push_str(g.label(v));
            for x in self.row(v) {
                out.push(' ');
                out.push_str(&format!("{x:?}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertex_count(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn row(&self, v: usize) -> &[f64] {
        &self.coords[v * self.dim..(v + 1) * self.dim]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.row(i)
            .iter()
            .zip(self.row(j))
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// `x ↦ scale·x + shift` applied to every coordinate.
    pub fn affine(&self, scale: f64, shift: &[f64]) -> Result<Self> {
        if shift.len() != self.dim {
            return Err(Error::LengthMismatch(shift.len(), self.dim));
        }
        let coords = self
            .coords
            .chunks(self.dim)
            .flat_map(|row| row.iter().zip(shift).map(|(x, s)| scale * x + s))
            .collect();
        Self::new(self.dim, coords)
    }

    pub fn distance_extremes(&self) -> Result<DistanceExtremes> {
        DistanceMatrix::new(self).map(|d| d.extremes())
    }
}

/// `n k` header detection: two unsigned integers, and the following lines carry
/// exactly `k + 1` tokens.
fn header_dim(first: &[&str], rest: &[(usize, Vec<&str>)]) -> Option<usize> {
    if first.len() != 2 {
        return None;
    }
    let _n: usize = first[0].parse().ok()?;
    let k: usize = first[1].parse().ok()?;
    match rest.first() {
        Some((_, tokens)) if tokens.len() == k + 1 => Some(k),
        None => Some(k),
        _ => None,
    }
}

/// Pairwise distances, upper triangle stored row by row.
#[derive(Debug, Clone)]
pub struct DistanceMatrix {
    n: usize,
    condensed: Vec<f64>,
    extremes: DistanceExtremes,
}

impl DistanceMatrix {
    pub fn new(e: &Embedding) -> Result<Self> {
        let n = e.vertex_count();
        if n < 2 {
            return Err(Error::TooFewVertices { n, needed: 2 });
        }
        let condensed: Vec<f64> = (0..n)
            .into_par_iter()
            .flat_map_iter(|i| (i + 1..n).map(move |j| e.distance(i, j)))
            .collect();
        let (d_min, d_max) = condensed
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), &d| (lo.min(d), hi.max(d)));
        Ok(DistanceMatrix {
            n,
            condensed,
            extremes: DistanceExtremes { d_min, d_max },
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    fn offset(&self, i: usize) -> usize {
        // start of row i in the condensed upper triangle
        i * (2 * self.n - i - 1) / 2
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        use std::cmp::Ordering;
        match i.cmp(&j) {
            Ordering::Equal => 0.0,
            Ordering::Less => self.condensed[self.offset(i) + j - i - 1],
            Ordering::Greater => self.condensed[self.offset(j) + i - j - 1],
        }
    }

    /// Distances `d(i, j)` for `j > i`.
    pub fn row_tail(&self, i: usize) -> &[f64] {
        let start = self.offset(i);
        &self.condensed[start..start + self.n - i - 1]
    }

    pub fn extremes(&self) -> DistanceExtremes {
        self.extremes
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> Graph {
        Graph::parse_edge_list("a b\nb c\nc a", false).unwrap()
    }

    #[test]
    fn parses_with_header() {
        let e = Embedding::parse("3 2\na 0 0\nb 1 0\nc 0 1", &triangle()).unwrap();
        assert_eq!(e.dim(), 2);
        assert_eq!(e.row(2), &[0.0, 1.0]);
    }

    #[test]
    fn parses_without_header_and_reorders() {
        let e = Embedding::parse("c 0 1\nb 1 0\na 0 0\nzz 9 9\n", &triangle()).unwrap();
        assert_eq!(e.row(0), &[0.0, 0.0]);
        assert_eq!(e.row(1), &[1.0, 0.0]);
    }

    #[test]
    fn one_dimensional_integer_rows_are_not_a_header() {
        let g = Graph::parse_edge_list("1 2", false).unwrap();
        let e = Embedding::parse("1 5\n2 6\n", &g).unwrap();
        assert_eq!(e.dim(), 1);
        assert_eq!(e.coords(), &[5.0, 6.0]);
    }

    #[test]
    fn missing_vertex_is_named() {
        let err = Embedding::parse("3 2\na 0 0\nb 1 0", &triangle()).unwrap_err();
        assert_eq!(err.to_string(), "vertex c has no embedding");
    }

    #[test]
    fn inconsistent_dimension_and_garbage() {
        assert!(matches!(
            Embedding::parse("a 0 0\nb 1\nc 0 1", &triangle()),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            Embedding::parse("a 0 0\nb 1 x\nc 0 1", &triangle()),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(Embedding::parse("a 0 0\na 1 1\nb 0 0\nc 1 1", &triangle()).is_err());
    }

    #[test]
    fn distances() {
        let e = Embedding::from_rows(&[vec![0.0, 0.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(e.distance(0, 1), 5.0);
        assert_eq!(e.distance(1, 1), 0.0);
        let e = Embedding::from_rows(&[vec![1.0; 3], vec![2.0; 3]]).unwrap();
        assert!((e.distance(0, 1) - 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn extremes() {
        let line = Embedding::from_rows(&[vec![0.0], vec![1.0], vec![3.0]]).unwrap();
        assert_eq!(
            line.distance_extremes().unwrap(),
            DistanceExtremes { d_min: 1.0, d_max: 3.0 }
        );
        let same = Embedding::from_rows(&vec![vec![2.0, 2.0]; 4]).unwrap();
        assert!(same.distance_extremes().unwrap().is_degenerate());
        let square = Embedding::from_rows(&[vec![0., 0.], vec![1., 0.], vec![0., 1.], vec![1., 1.]]).unwrap();
        let ex = square.distance_extremes().unwrap();
        assert_eq!(ex.d_min, 1.0);
        assert!((ex.d_max - 2f64.sqrt()).abs() < 1e-15);
        let single = Embedding::from_rows(&[vec![0.0]]).unwrap();
        assert!(matches!(single.distance_extremes(), Err(Error::TooFewVertices { .. })));
    }

    #[test]
    fn condensed_indexing() {
        let e = Embedding::from_rows(&[vec![0.0], vec![1.0], vec![3.0], vec![7.0]]).unwrap();
        let d = DistanceMatrix::new(&e).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(d.get(i, j), e.distance(i, j));
            }
        }
        assert_eq!(d.row_tail(1), &[2.0, 6.0]);
    }

    #[test]
    fn text_round_trip() {
        let g = triangle();
        let e = Embedding::from_rows(&[vec![0.1, -2.5], vec![1e-9, 3.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(Embedding::parse(&e.to_text(&g), &g).unwrap(), e);
    }
}
