//! Error types shared across the crate.

use thiserror::Error;

/// Errors from geometric constructors and predicates.
#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("degenerate geometry: {0}")]
    Degenerate(String),
    #[error("ring is self-intersecting")]
    SelfIntersecting,
    #[error("non-finite coordinate encountered")]
    NonFinite,
    #[error("bearing undefined for coincident points")]
    CoincidentPoints,
    #[error("spacing must be positive, got {0}")]
    NonPositiveSpacing(f64),
}

/// Errors from regression and curve fitting.
#[derive(Debug, Error)]
pub enum FitError {
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("x values have zero variance")]
    ZeroXVariance,
    #[error("x values must be strictly increasing and distinct")]
    NonIncreasingX,
    #[error("{kind} fit requires positive x values")]
    NonPositiveX { kind: &'static str },
    #[error("power fit requires positive y values")]
    NonPositiveY,
    #[error("linear system is singular")]
    SingularSystem,
}

/// Errors from scene ingestion and table parsing.
#[derive(Debug, Error)]
pub enum SceneError {
    #[error("io error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },
    #[error("duplicate id '{id}' in {path}")]
    DuplicateId { path: String, id: String },
    #[error("{path}:{line}: {message}")]
    Table {
        path: String,
        line: usize,
        message: String,
    },
    #[error("unknown {what} id '{id}'")]
    UnknownId { what: &'static str, id: String },
}
