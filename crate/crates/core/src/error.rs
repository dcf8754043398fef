use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid group specification `{0}`")]
    GroupSpec(String),

    #[error("group order {order} exceeds the configured cap {cap}")]
    OrderCap { order: usize, cap: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{0} has no sign representation")]
    NoSignRepresentation(String),

    #[error("frequency index k={k} out of range for n={n} (need 0 < k < n/2)")]
    FrequencyOutOfRange { n: usize, k: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("irrep `{name}` failed validation: {reason}")]
    InvalidIrrep { name: String, reason: String },

    #[error("irrep discovery did not converge: {0}")]
    Discovery(String),

    #[error("zero-norm input to {0}")]
    ZeroNorm(&'static str),

    #[error("rank deficiency in {what}: rank {rank} < {expected}")]
    RankDeficient {
        what: String,
        rank: usize,
        expected: usize,
    },

    #[error("training diverged at epoch {epoch}: loss = {loss}")]
    NonFinite { epoch: usize, loss: f64 },

    #[error("malformed file {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("unknown irrep `{0}`")]
    UnknownIrrep(String),

    #[error("unknown ablation `{0}`")]
    UnknownAblation(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) trait IoContext<T> {
    fn at(self, path: impl Into<PathBuf>) -> Result<T>;
}

impl<T> IoContext<T> for std::io::Result<T> {
    fn at(self, path: impl Into<PathBuf>) -> Result<T> {
        self.map_err(|source| Error::Io {
            path: path.into(),
            source,
        })
    }
}
