use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field `{0}` is not listed in the manifest")]
    UnknownField(String),

    #[error("`{path}` holds {found} samples, expected {expected}")]
    SizeMismatch {
        path: PathBuf,
        expected: usize,
        found: usize,
    },

    #[error("non-finite sample at index {index} in field `{field}`")]
    NonFinite { field: String, index: usize },

    #[error("unsupported scalar encoding `{0}`")]
    UnsupportedEncoding(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid block layout: {0}")]
    InvalidLayout(String),

    #[error("block compositing failed: {0}")]
    Composite(String),

    #[error("invalid scale bins: {0}")]
    InvalidBins(String),

    #[error("band {bin} has imaginary residue {residue:e} above tolerance")]
    ImaginaryResidue { bin: usize, residue: f64 },

    #[error("field has zero energy")]
    ZeroEnergy,

    #[error("mesh is empty")]
    EmptyMesh,

    #[error("degenerate gradient at ({0}, {1}, {2})")]
    DegenerateGradient(f64, f64, f64),

    #[error("point ({0}, {1}, {2}) lies outside the grid")]
    OutOfGrid(f64, f64, f64),

    #[error("index out of range: {0}")]
    OutOfRange(String),

    #[error("missing input: {0}")]
    MissingInput(String),

    #[error("field mismatch: {0}")]
    FieldMismatch(String),

    #[error("invalid normalization config: {0}")]
    Normalization(String),

    #[error("malformed file `{path}`: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("io error on `{path}`: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
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
}

pub type Result<T> = std::result::Result<T, Error>;
