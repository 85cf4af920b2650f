use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("level mismatch: {left} vs {right}")]
    LevelMismatch { left: u32, right: u32 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("path must start at the origin (first value is {0:?})")]
    NotAnchored(Vec<f64>),

    #[error("expected {expected} values, got {got}")]
    BadLength { expected: usize, got: usize },

    #[error("projection level {requested} exceeds path level {level}")]
    ProjectionLevel { requested: u32, level: u32 },

    #[error("variation exponent q = {0} is below 1")]
    ExponentBelowOne(f64),

    #[error("grid level {level} exceeds the partition DP cap {cap} (raise it with `set_max_dp_level` / --max-level)")]
    LevelCap { level: u32, cap: u32 },

    #[error("index order violated: i = {i} > j = {j}")]
    IndexOrder { i: usize, j: usize },

    #[error("section {0} has positive measure but is disconnected")]
    DisconnectedSection(String),

    #[error("no admissible overlap witness: {0}")]
    OverlapUnsatisfiable(String),

    #[error("conditioning event too rare: acceptance rate {rate:.3e} below floor {floor:.1e} after {attempts} draws")]
    RareEvent { rate: f64, floor: f64, attempts: u64 },

    #[error("eigen solve failed: {0}")]
    Eigen(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
