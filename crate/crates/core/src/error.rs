use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate region: no grid cell center lies inside the cube")]
    DegenerateRegion,

    #[error("exponent must satisfy p >= 1, got {0}")]
    BadExponent(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("grid is not dyadic: {0}")]
    NotDyadic(String),

    #[error("cube is not aligned to grid cells")]
    Unaligned,

    #[error("parent requested above the top scale of the lattice")]
    AboveTopScale,

    #[error("dual function violates the unit ball constraint (norm {norm})")]
    DualNormViolation { norm: f64 },

    #[error("matrix is not an orthogonal projection (residual {0:e})")]
    NotProjection(f64),

    #[error("body is degenerate in its span; project first")]
    ProjectFirst,

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("stopping collection verification failed: {0}")]
    Verification(String),

    #[error("function is not decomposable over the stopping collection: {0}")]
    NotDecomposable(String),

    #[error("recursion exceeded max depth {0}")]
    DepthExceeded(usize),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
