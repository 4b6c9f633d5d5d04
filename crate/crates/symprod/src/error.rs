use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degree must be positive")]
    ZeroDegree,
    #[error("invalid image vector: {0}")]
    InvalidImage(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("lift target {target} is below source degree {degree}")]
    LiftBelowDegree { degree: u32, target: u32 },
    #[error("cut length {len} outside 1..={degree}")]
    CutOutOfRange { degree: u32, len: u32 },
    #[error("involution needs 2t <= n, got t={t}, n={n}")]
    TooManyTranspositions { n: u32, t: u32 },
    #[error("exhaustive mode capped at degree {cap}, got {degree}")]
    ExhaustiveCap { degree: u32, cap: u32 },
    #[error("shape entry at stage {0} must be >= 1")]
    ZeroShapeEntry(usize),
    #[error("shapes disagree at stage {0}")]
    ShapeMismatch(usize),
    #[error("stage {0} not covered by the declared prefix or tail rule")]
    HorizonExceeded(usize),
    #[error("horizon mismatch: {0} vs {1}")]
    HorizonMismatch(usize, usize),
    #[error("index set is finite; tail statistics need an infinite rule")]
    FiniteIndexSet,
    #[error("invalid almost permutation: {0}")]
    InvalidAlmostPermutation(String),
    #[error("not an involution")]
    NotInvolution,
    #[error("cycle type does not partition the degree")]
    BadCycleType,
    #[error("horizon {0} too large for exact certificate enumeration (cap {1})")]
    CertificateHorizon(usize, usize),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
