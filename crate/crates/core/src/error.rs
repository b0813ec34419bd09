//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by graph construction, sampling, inference, and
/// spectral routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("vertex {vertex} out of range for a graph with {num_vertices} vertices")]
    VertexOutOfRange { vertex: usize, num_vertices: usize },

    #[error("self-loop at vertex {0} is not allowed")]
    SelfLoop(usize),

    #[error("label {label} out of range 1..={num_labels}")]
    LabelOutOfRange { label: u32, num_labels: usize },

    #[error("duplicate edge between vertices {0} and {1}")]
    DuplicateEdge(usize, usize),

    #[error("directed edge id {id} out of range for {num_directed} directed edges")]
    EdgeIdOutOfRange { id: usize, num_directed: usize },

    #[error("expected {expected} entries per label, got {got}")]
    LabelCountMismatch { expected: usize, got: usize },

    #[error("{0} modules requested; only two-module ensembles are supported")]
    UnsupportedModuleCount(usize),

    #[error("at least one edge label is required")]
    NoLabels,

    #[error("mean degree for label {label} must be positive, got {value}")]
    NonPositiveDegree { label: u32, value: f64 },

    #[error("strength for label {label} must lie in [0, 1], got {value}")]
    StrengthOutOfRange { label: u32, value: f64 },

    #[error("at least {min} vertices required, got {got}")]
    TooFewVertices { min: usize, got: usize },

    #[error("label {label} edge probability {prob} exceeds 1; increase the vertex count")]
    DensityTooHigh { label: u32, prob: f64 },

    #[error("combined edge probability {prob} for a vertex pair exceeds 1; increase the vertex count")]
    TotalDensityTooHigh { prob: f64 },

    #[error("could not place {requested} label-{label} edges among {available} vertex pairs")]
    BlockExhausted { label: u32, requested: u64, available: u64 },

    #[error("planted-biased initialization requires a planted assignment")]
    MissingPlantedAssignment,

    #[error("assignment value {value} at vertex {vertex} is not a valid module index")]
    InvalidModule { vertex: usize, value: usize },

    #[error("length mismatch: {left} vs {right} {what}")]
    LengthMismatch { left: usize, right: usize, what: &'static str },

    #[error("label {label} has no edges and zero weight share; band radius undefined")]
    EmptyLabelWeight { label: u32 },

    #[error("dense spectrum limited to operators of dimension {limit}, got {dim}")]
    DenseDimensionExceeded { dim: usize, limit: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("trajectory too short: need at least {min} recorded steps, got {got}")]
    TrajectoryTooShort { min: usize, got: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Linalg(#[from] ndarray_linalg::error::LinalgError),
}

pub type Result<T> = std::result::Result<T, Error>;
