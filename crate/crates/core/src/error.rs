use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("antenna {index} at ({x}, {y}) lies outside the region of side {region_size}")]
    OutsideRegion {
        index: usize,
        x: f64,
        y: f64,
        region_size: f64,
    },

    #[error("antennas {first} and {second} are {distance} apart, below the minimum spacing {min_spacing}")]
    SpacingViolation {
        first: usize,
        second: usize,
        distance: f64,
        min_spacing: f64,
    },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("channel vector is zero")]
    ZeroChannel,

    #[error("primary receiver index {index} out of range (K = {count})")]
    InvalidReceiver { index: usize, count: usize },

    #[error("desired channel lies in the span of the primary channels; zero-forcing direction vanishes")]
    ZeroForcingDegenerate,

    #[error("initial beamformer violates the constraints: {0}")]
    InfeasibleStart(String),

    #[error("inner solver did not converge after {iterations} iterations")]
    NotConverged { iterations: usize },

    #[error("region of side {region_size} cannot hold {n} antennas at spacing {spacing}")]
    RegionTooSmall {
        n: usize,
        region_size: f64,
        spacing: f64,
    },

    #[error("unknown scheme `{0}`")]
    UnknownScheme(String),

    #[error("unknown sweep axis `{0}`")]
    UnknownAxis(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("no data: {0}")]
    Empty(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
