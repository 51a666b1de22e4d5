use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{op}: dimension mismatch ({}x{} vs {}x{})", left.0, left.1, right.0, right.1)]
    DimensionMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("SVD of a {rows}x{cols} matrix did not converge")]
    NonConvergence { rows: usize, cols: usize },

    #[error("null space of a {rows}x{cols} matrix of rank {rank} is smaller than {needed}")]
    InsufficientNullSpace {
        rows: usize,
        cols: usize,
        rank: usize,
        needed: usize,
    },

    #[error("matrix is not orthonormal (residual {residual:.3e})")]
    NotOrthonormal { residual: f64 },

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("user drop failed after {attempts} rejection attempts")]
    Geometry { attempts: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("codebook is empty")]
    EmptyCodebook,

    #[error("codeword index {index} out of range for cell {cell} (size {size})")]
    IndexOutOfRange {
        cell: usize,
        index: usize,
        size: usize,
    },

    #[error("large-scale fading of user {user} is singular at BS {bs}")]
    SingularLargeScale { user: usize, bs: usize },

    #[error("block diagonalization infeasible for user {user}")]
    BdInfeasible { user: usize },

    #[error("interference-plus-noise matrix is ill-conditioned (condition {condition:.3e})")]
    IllConditioned { condition: f64 },

    #[error("malformed codebook container: {0}")]
    Container(String),

    #[error("experiment aborted: {0}")]
    Aborted(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
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
