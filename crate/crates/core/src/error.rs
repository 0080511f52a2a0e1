use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid space model: {0}")]
    InvalidModel(String),
    #[error("model mismatch: {0}")]
    ModelMismatch(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("empty supremum")]
    EmptySupremum,
    #[error("undefined lattice power of zero")]
    ZeroLatticePower,
    #[error("expected a real-valued vector or operator")]
    NotReal,
    #[error("expected a nonnegative vector")]
    NotNonnegative,
    #[error("Markov check requires C(K) model")]
    MarkovNeedsSupNorm,
    #[error("operator is not a Markov operator")]
    NotMarkov,
    #[error("λ in spectrum (numerically): {0}")]
    InSpectrum(String),
    #[error("ideal not T-invariant")]
    IdealNotInvariant,
    #[error("mixed norm tags in direct sum")]
    MixedNormTags,
    #[error("truncation too small: {0}")]
    TruncationTooSmall(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("spectral radius exceeds 1 (r = {0})")]
    SpectralRadiusExceedsOne(f64),
    #[error("orbit not monotone")]
    OrbitNotMonotone,
    #[error("{0} is not an eigenvalue")]
    NotAnEigenvalue(String),
    #[error("eigensolver did not converge")]
    EigenSolverFailed,
    #[error("vector is not in the fixed space (residual {0:e})")]
    NotFixed(f64),
    #[error("monotone iteration did not converge within {0} steps")]
    NoConvergence(usize),
    #[error("x is not a fixed vector (residual {0:e})")]
    NotAFixedVector(f64),
    #[error("spectral radius is zero")]
    ZeroSpectralRadius,
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
