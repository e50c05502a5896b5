use thiserror::Error;

/// Errors produced by the expansion engines and their oracles.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("multi-index enumeration of {count} entries exceeds the limit of {limit}")]
    EnumerationTooLarge { count: u128, limit: u128 },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("asymmetric diffusion matrix {which}: entry ({i},{j}) = {a} but ({j},{i}) = {b}")]
    AsymmetricDiffusion {
        which: String,
        i: usize,
        j: usize,
        a: f64,
        b: f64,
    },

    #[error("diffusion matrix is not positive semidefinite at domain vertex {vertex:?} (min eigenvalue {min_eig:e})")]
    NotPositiveSemidefinite { vertex: Vec<f64>, min_eig: f64 },

    #[error("jump intensity is negative on the domain (value {value:e} at {at:?})")]
    NegativeIntensity { value: f64, at: Vec<f64> },

    #[error("jump moment for multi-index {alpha:?} is missing (required up to order {k_max})")]
    MissingMoment { alpha: Vec<u32>, k_max: usize },

    #[error("invalid jump moments: {0}")]
    InvalidMoments(String),

    #[error("domain box is unbounded; supply a bounding box to compute growth constants")]
    UnboundedDomain,

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("zero crossing of the transform near s = {s} (|denominator| = {magnitude:e})")]
    ZeroCrossing { s: f64, magnitude: f64 },

    #[error("non-affine logarithmic coefficient at order {k}: residual {residual:e} exceeds tolerance {tol:e}")]
    AffinityViolation { k: usize, residual: f64, tol: f64 },

    #[error("Riccati solution blew up at s = {at}; requested s = {requested}")]
    BlowUp { at: f64, requested: f64 },

    #[error("requested s = {requested} lies outside the integrated range [0, {end}]")]
    OutOfRange { requested: f64, end: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
