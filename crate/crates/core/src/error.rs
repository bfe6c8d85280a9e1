use std::path::PathBuf;

use thiserror::Error;

use crate::spectral::ClassId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    // cube file
    #[error("not a hyperspectral cube file (bad magic)")]
    BadMagic,
    #[error("corrupt cube header: {0}")]
    CorruptHeader(String),
    #[error("truncated cube payload: expected {expected} bytes, found {found}")]
    TruncatedPayload { expected: usize, found: usize },
    #[error("wavelengths must be strictly increasing (band {band})")]
    NonIncreasingWavelengths { band: usize },
    #[error("invalid cube: {0}")]
    InvalidCube(String),
    #[error("pixel ({x}, {y}) is outside the {width}x{height} image")]
    OutOfBounds {
        x: i64,
        y: i64,
        width: usize,
        height: usize,
    },
    #[error("false RGB needs at least 3 bands, cube has {0}")]
    TooFewBands(usize),
    #[error("invalid camera parameters: {0}")]
    InvalidCamera(String),

    // spectral database
    #[error("class name {0:?} already exists")]
    DuplicateClass(String),
    #[error("unknown class id {0}")]
    UnknownClass(ClassId),
    #[error("zero spectrum: spectral angle is undefined")]
    ZeroSpectrum,
    #[error("spectrum length mismatch: {expected} vs {found}")]
    BandMismatch { expected: usize, found: usize },
    #[error("empty spectral database")]
    EmptyDatabase,
    #[error("invalid spectral database: {0}")]
    InvalidDatabase(String),
    #[error("invalid taxonomy path {0:?}: must be non-empty and rooted at World")]
    InvalidTaxonomy(Vec<String>),
    #[error("class id space exhausted")]
    ClassIdOverflow,

    // parameters
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("polygon needs at least 3 vertices, got {0}")]
    DegeneratePolygon(usize),

    // scene synthesis
    #[error("invalid scene spec: {0}")]
    InvalidScene(String),
    #[error("regions {first} and {second} overlap")]
    OverlappingRegions { first: usize, second: usize },
    #[error("class {0:?} has no spectral profile")]
    MissingProfile(String),

    // raster and document I/O
    #[error("image error: {0}")]
    Image(String),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("label map mismatch: {0}")]
    LabelMapMismatch(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
