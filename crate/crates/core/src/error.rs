use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension must be 2 or 3, got {0}")]
    BadDimension(usize),

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("matrix is singular (|det| = {det_abs:.3e})")]
    SingularMatrix { det_abs: f64 },

    #[error("matrix is not symmetric (max deviation {deviation:.3e} relative, tolerance {tolerance:.3e})")]
    NotSymmetric { deviation: f64, tolerance: f64 },

    #[error("matrix is not antisymmetric (max deviation {deviation:.3e} relative)")]
    NotAntisymmetric { deviation: f64 },

    #[error("shape matrix imaginary part is not positive definite")]
    NotPositiveDefinite,

    #[error("non-finite value in {context}")]
    NonFinite { context: String },

    #[error("potential sample is non-finite at alpha = {alpha}")]
    NonFinitePotential { alpha: f64 },

    #[error("finite-difference result inconsistent under step refinement ({context}: rel. deviation {deviation:.3e} > 1e-3); derivative step likely colliding with quadrature noise")]
    FiniteDifferenceNoise { context: String, deviation: f64 },

    #[error("degenerate path segment: endpoints coincide")]
    DegenerateSegment,

    #[error("coincident x1 coordinates: closed-form ridge line average is singular; use quadrature")]
    RidgeSingularity,

    #[error("potential is not weak: max |V| / E0 = {ratio:.3} exceeds {limit}")]
    PotentialTooStrong { ratio: f64, limit: f64 },

    #[error("matrix I + (Omega - B t / mu) t is singular at t = {t} (|det| = {det_abs:.3e})")]
    SingularEvolution { t: f64, det_abs: f64 },

    #[error("grid configuration error: {0}")]
    GridConfig(String),

    #[error("norm drift {drift:.3e} exceeds {limit:.1e} after {steps} steps")]
    NormDrift { drift: f64, limit: f64, steps: u64 },

    #[error("checkpoint i/o: {0}")]
    CheckpointIo(#[from] std::io::Error),

    #[error("checkpoint format: {0}")]
    CheckpointFormat(String),
}

pub type Result<T> = std::result::Result<T, Error>;
