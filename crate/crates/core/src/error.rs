use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Amplitude reached the lattice edge; the walk ran longer than the lattice allows.
    #[error("boundary overflow: nonzero amplitude at site {site} before translation")]
    BoundaryOverflow { site: i64 },

    #[error("degenerate state: the |+> component is identically zero")]
    DegenerateState,

    #[error("insufficient data: need at least {needed} points, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("no kink: best two-segment fit improves the residual by only {improvement:.3} (< 5%)")]
    NoKink { improvement: f64 },

    #[error("maximum at the boundary of the scanned range (param {param}); widen the scan")]
    BoundaryMaximum { param: f64 },

    #[error("regime coverage: {0}")]
    RegimeCoverage(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid training band: {0}")]
    InvalidBand(String),

    #[error("degenerate sample: all features are zero")]
    DegenerateSample,

    #[error("training failed: {0}")]
    TrainingFailed(String),

    #[error("no transition: the classification curve never crosses 0.5")]
    NoTransition,

    #[error("invalid region {0}; expected 1, 2 or 3")]
    InvalidRegion(u8),

    #[error("model file: {0}")]
    ModelFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
