use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("invalid geometry: {0}")]
    Geometry(String),
    #[error("metric projection is multi-valued at the origin")]
    SingularProjection,
    #[error("Hanzawa map not invertible: {0}")]
    InvalidHeight(String),
    #[error("operator context is stale (built for a different height function)")]
    StaleContext,
    #[error("constitutive domain error: {0}")]
    Domain(String),
    #[error("invalid material model: {0}")]
    Material(String),
    #[error("linear solve failed: {0}")]
    Solve(String),
    #[error("fixed-point iteration did not converge after {iterations} iterations (last increment {increment:e}); try a smaller time step")]
    NoConvergence { iterations: usize, increment: f64 },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("snapshot error: {0}")]
    Snapshot(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for FlowError {
    fn from(e: std::io::Error) -> Self {
        FlowError::Io(e.to_string())
    }
}

pub type Result<T, E = FlowError> = std::result::Result<T, E>;
