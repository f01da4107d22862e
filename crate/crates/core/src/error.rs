use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("quadrature did not converge after {nodes} nodes")]
    QuadratureNotConverged { nodes: usize },
    #[error("evaluation point lies on (or too close to) the support: {detail}")]
    PointOnSupport { detail: String },
    #[error("moment c_{index} vanishes, Carleman term undefined")]
    ZeroMoment { index: usize },
    #[error("measure has weights of both signs")]
    MixedSign,
    #[error("intervals of generators {left} and {right} overlap in more than one point")]
    IntervalOverlap { left: usize, right: usize },
    #[error("generator {generator} carries mass at the junction point {point}")]
    AtomAtJunction { generator: usize, point: String },
    #[error("continuous generators {left} and {right} touch; only discrete neighbours may share an endpoint")]
    ContinuousJunction { left: usize, right: usize },
    #[error("chain depth {depth} exceeds the supported maximum of {max} for continuous generators")]
    DepthExceeded { depth: usize, max: usize },
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("insufficient moments: need index {needed}, have {available}")]
    InsufficientMoments { needed: usize, available: usize },
    #[error("nullspace has dimension {dim} (expected 1): {reason}")]
    DegenerateNullspace { dim: usize, reason: String },
    #[error("degree violation in a_{index}: expected {expected}, found {found}")]
    DegreeViolation { index: usize, expected: i64, found: i64 },
    #[error("root polishing failed to converge: {0}")]
    RootPrecisionLoss(String),
    #[error("division by zero in {0}")]
    DivisionByZero(String),
    #[error("rational function has a pole of multiplicity > 1")]
    NonSimplePole,
    #[error("evaluation point hits a pole: {0}")]
    PoleHit(String),
    #[error("unsupported operation: {0}")]
    Unsupported(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
