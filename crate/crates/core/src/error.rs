use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("boundary array for axis {axis} must be finite, strictly increasing and hold at least two values")]
    NonMonotoneBoundaries { axis: usize },

    #[error("{what} sums to {sum}, expected 1")]
    ProbabilityNotNormalized { what: String, sum: f64 },

    #[error("negative probability {value} at {what}")]
    NegativeProbability { what: String, value: f64 },

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point lies outside the model support")]
    OutsideSupport,

    #[error("invalid count: {0}")]
    InvalidCount(String),

    #[error("noise positions conflict: {0}")]
    PositionConflict(String),

    #[error("matrix is not orthonormal (max |U^T U - I| = {deviation:e})")]
    NotOrthonormal { deviation: f64 },

    #[error("operation needs identical boundary arrays on every axis")]
    HeterogeneousGrids,

    #[error("distribution sums to {sum}, expected 1")]
    NotNormalized { sum: f64 },

    #[error("encoder is not exactly computable on this model: {0}")]
    NotExactlyComputable(String),

    #[error("invalid coordinates: {0}")]
    InvalidCoordinates(String),

    #[error("layer {layer} is not a function of layer {}'s output", layer - 1)]
    NotACoarsening { layer: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid encoder: {0}")]
    InvalidEncoder(String),

    #[error("decoder has no row for a positive-mass symbol: {0}")]
    MissingDecoderRow(String),

    #[error("alphabet of {cells} cells exceeds the exhaustive budget of {limit}")]
    TooLarge { cells: usize, limit: usize },

    #[error("self-check failed for {quantity}: expected {expected}, computed {computed}")]
    SelfCheckFailed {
        quantity: String,
        expected: f64,
        computed: f64,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Variant name, for diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NonMonotoneBoundaries { .. } => "NonMonotoneBoundaries",
            Error::ProbabilityNotNormalized { .. } => "ProbabilityNotNormalized",
            Error::NegativeProbability { .. } => "NegativeProbability",
            Error::IndexOutOfRange { .. } => "IndexOutOfRange",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::OutsideSupport { .. } => "OutsideSupport",
            Error::InvalidCount { .. } => "InvalidCount",
            Error::PositionConflict { .. } => "PositionConflict",
            Error::NotOrthonormal { .. } => "NotOrthonormal",
            Error::HeterogeneousGrids { .. } => "HeterogeneousGrids",
            Error::NotNormalized { .. } => "NotNormalized",
            Error::NotExactlyComputable { .. } => "NotExactlyComputable",
            Error::InvalidCoordinates { .. } => "InvalidCoordinates",
            Error::NotACoarsening { .. } => "NotACoarsening",
            Error::ShapeMismatch { .. } => "ShapeMismatch",
            Error::InvalidEncoder { .. } => "InvalidEncoder",
            Error::MissingDecoderRow { .. } => "MissingDecoderRow",
            Error::TooLarge { .. } => "TooLarge",
            Error::SelfCheckFailed { .. } => "SelfCheckFailed",
            Error::InvalidConfig { .. } => "InvalidConfig",
            Error::Json { .. } => "Json",
            Error::Csv { .. } => "Csv",
            Error::Io { .. } => "Io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
