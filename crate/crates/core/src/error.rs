use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("vertex id out of range: {vertex} (graph has {num_vertices} vertices)")]
    VertexOutOfRange { vertex: usize, num_vertices: usize },

    #[error("time-step {time} outside horizon 1..={horizon}")]
    TimeOutOfRange { time: usize, horizon: usize },

    #[error("label dimension mismatch: expected {expected}, got {actual}")]
    LabelDimension { expected: usize, actual: usize },

    #[error("shape mismatch in {context}: expected {expected:?}, got {actual:?}")]
    Shape {
        context: &'static str,
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error(
        "power iteration did not converge after {iterations} iterations (last estimate {estimate})"
    )]
    NoConvergence {
        iterations: usize,
        estimate: f64,
        last_iterate: Vec<f64>,
    },

    #[error("graph is not static: edge set at t={time} differs from t=1")]
    NotStatic { time: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("recurrent weight draw for layer {layer} was degenerate after {attempts} attempts")]
    DegenerateWeights { layer: usize, attempts: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("{0}")]
    Data(String),

    #[error("{path}:{line}: {reason}")]
    Parse {
        path: PathBuf,
        line: u64,
        reason: String,
    },

    #[error("unknown graph id {graph_id} referenced in {path}:{line}")]
    UnknownGraph {
        graph_id: usize,
        path: PathBuf,
        line: u64,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
