use std::path::PathBuf;

use thiserror::Error;

use crate::init::ply::PlyError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("covariance is not symmetric positive definite")]
    DegenerateCovariance,
    #[error("conic is degenerate (|det| too small)")]
    SingularConic,
    #[error("conics coincide up to scale; infinitely many intersections")]
    InfiniteIntersection,
    #[error("line is not tangent to the conic (relative discriminant {0:e})")]
    NotTangent(f64),
    #[error("boundary ellipses cannot be connected by tangents: {0}")]
    DegenerateSketch(&'static str),
    #[error("expected {expected} SH coefficients for order {order}, got {got}")]
    ShCoefficientCount {
        order: usize,
        expected: usize,
        got: usize,
    },
    #[error("SH order {0} is not supported (0..=3)")]
    ShOrder(usize),
    #[error("invalid primitive: {0}")]
    InvalidPrimitive(String),
    #[error("invalid camera: {0}")]
    InvalidCamera(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("image dimensions differ: {0}x{1}x{2} vs {3}x{4}x{5}")]
    DimensionMismatch(usize, usize, usize, usize, usize, usize),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("malformed image: {0}")]
    Image(String),
    #[error(transparent)]
    Ply(#[from] PlyError),
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
