use std::path::PathBuf;

/// Errors produced by every fallible operation in the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("archive manifest not found at {0}")]
    MissingManifest(PathBuf),

    #[error("malformed file {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("duplicate entry id `{0}`")]
    DuplicateId(String),

    #[error("unknown entry id `{0}`")]
    UnknownId(String),

    #[error("rank {rank} is infeasible: at most {max} available")]
    RankInfeasible { rank: usize, max: usize },

    #[error("singular value decomposition did not converge")]
    SvdNoConvergence,

    #[error("basis columns are not orthonormal (max deviation {deviation:e})")]
    NotOrthonormal { deviation: f64 },

    #[error("log map undefined between {pair}: a principal angle reaches pi/2")]
    LogMapUndefined { pair: String },

    #[error("tangent vector is attached to a different reference basis")]
    ReferenceMismatch,

    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("relative mass drift {drift:e} exceeds 1e-3; reduce the time step")]
    MassDrift { drift: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            reason: reason.into(),
        }
    }

    /// True for failures of the file system rather than of the data.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. } | Error::MissingManifest(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
