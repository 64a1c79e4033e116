use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("invalid boundary function: {0}")]
    InvalidFunction(String),
    #[error("operation requires a piecewise-constant boundary function")]
    NotPiecewiseConstant,
    #[error("approximation error {eps} would destroy admissibility margin {margin}")]
    AdmissibilityLost { margin: f64, eps: f64 },
    #[error("point was swallowed at capacity time {time}")]
    Swallowed { time: f64 },
    #[error("query {query} outside the available range [{low}, {high}]")]
    OutOfRange { query: f64, low: f64, high: f64 },
    #[error("boundary mesh too coarse: interval subtends {angle} rad (max {max_angle})")]
    MeshTooCoarse { angle: f64, max_angle: f64 },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error(
        "lattice too large for a dense Green matrix: {interior} interior vertices (cap {cap})"
    )]
    SizeCap { interior: usize, cap: usize },
    #[error("degenerate geometry: {0}")]
    Degenerate(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("threshold reached at t = {time}: contact mass {mass}")]
    Threshold { time: f64, mass: f64 },
}
