use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the scoring pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("graph has no vertices")]
    EmptyGraph,

    #[error("graph has no edges")]
    EdgelessGraph,

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("vertex {label} has no embedding")]
    MissingEmbedding { label: String },

    #[error("vertex {label}: expected {expected} coordinates, found {found}")]
    DimensionMismatch {
        label: String,
        expected: usize,
        found: usize,
    },

    #[error("vertex {label} appears more than once")]
    DuplicateVertex { label: String },

    #[error("need at least {needed} vertices, got {n}")]
    TooFewVertices { n: usize, needed: usize },

    #[error("distance {d} outside [{d_min}, {d_max}]")]
    DistanceOutOfRange { d: f64, d_min: f64, d_max: f64 },

    #[error(
        "degree sequence infeasible: vertex {vertex} has degree {degree}, \
         not smaller than the sum {rest} of all other degrees"
    )]
    Infeasible { vertex: usize, degree: u64, rest: u64 },

    #[error("degree sequence infeasible: n = {n} admits no unique positive weights")]
    Degenerate { n: usize },

    #[error("degree sequence infeasible: vertex {vertex} has degree 0")]
    ZeroDegree { vertex: usize },

    #[error("weights did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        trace: Vec<f64>,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("negative entry at index {idx}: {value}")]
    NegativeEntry { idx: usize, value: f64 },

    #[error("not a probability vector (sum = {sum})")]
    NotNormalized { sum: f64 },

    #[error("rankings do not contain the same ids")]
    RankMismatch,

    #[error("no alpha on the grid produced a fitted model: {0}")]
    AllAlphaFailed(Box<Error>),

    #[error("could not produce a connected graph after {attempts} attempts")]
    Disconnected { attempts: usize },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True when the error means the model cannot exist for this degree sequence.
    pub fn is_infeasible(&self) -> bool {
        match self {
            Error::Infeasible { .. } | Error::Degenerate { .. } | Error::ZeroDegree { .. } => true,
            Error::AllAlphaFailed(inner) => inner.is_infeasible(),
            _ => false,
        }
    }

    pub fn is_non_convergence(&self) -> bool {
        match self {
            Error::NonConvergence { .. } => true,
            Error::AllAlphaFailed(inner) => inner.is_non_convergence(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
