use thiserror::Error;

/// Everything that can go wrong in the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension {0} is odd; phase space dimension must be even")]
    OddDimension(usize),
    #[error("dimension {dim} is below the minimum {min} for this operation")]
    DimensionTooSmall { dim: usize, min: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("symplectic axes must be strictly positive and sorted ascending")]
    UnsortedAxes,
    #[error("vertex list is not centrally symmetric: -v missing for vertex {0}")]
    AsymmetricVertices(usize),
    #[error("vertex list does not span the space (rank {rank} < {dim})")]
    DegenerateVertices { rank: usize, dim: usize },
    #[error("matrix is not symmetric positive definite")]
    NotPositiveDefinite,
    #[error("matrix condition number {0:e} exceeds the supported range")]
    IllConditioned(f64),
    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: String, found: String },
    #[error("vector is not a unit vector (norm {0})")]
    NotUnit(f64),
    #[error("vectors are not orthogonal (|<u,v>| = {0:e})")]
    NotOrthogonal(f64),
    #[error("bracket expansion failed: map is not coercive along the section normal")]
    BracketExpansion,
    #[error("no exact route for {0}; use a closed-form family")]
    NoExactRoute(String),
    #[error("operation not supported for {0}")]
    Unsupported(String),
    #[error("eigenvalue with real part {real:e} exceeds tolerance {tol:e}")]
    SpectralImpurity { real: f64, tol: f64 },
    #[error("eigen decomposition did not converge")]
    NoConvergence,
    #[error("per-sample identity violated: {0}")]
    IdentityViolation(String),
    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("α is only a heuristic lower bound for this body; pass --allow-heuristic to accept it")]
    HeuristicRejected,
    #[error("{failed} of {total} samples failed ({reason})")]
    TooManyFailures {
        failed: usize,
        total: usize,
        reason: String,
    },
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
