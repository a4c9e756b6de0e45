use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension {0} unsupported; expected 1, 2 or 3")]
    UnsupportedDimension(usize),

    #[error("depth {0} unsupported; expected 1..={1}")]
    UnsupportedDepth(usize, usize),

    #[error("cube at level {level} lies outside the model of depth {depth}")]
    CubeOutOfModel { level: u32, depth: usize },

    #[error("expected {expected} cell values, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("functions live on different models")]
    ModelMismatch,

    #[error("cube has no Haar function at this depth")]
    NoHaarFunction,

    #[error("signature {0:#b} is not cancellative")]
    NonCancellative(u8),

    #[error("weight must be strictly positive on every cell")]
    NonPositiveWeight,

    #[error("exponent p = {0} must be finite and > 1")]
    InvalidExponent(f64),

    #[error("stopping cubes overlap or leave the base cube")]
    OverlappingStopCubes,

    #[error("empty collection")]
    EmptyCollection,

    #[error("BMO norm zero")]
    ZeroBmoNorm,

    #[error("sparseness parameter must exceed 1, got {0}")]
    InvalidSparseness(f64),

    #[error("power iteration did not converge after {iterations} steps (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
