use thiserror::Error;

/// Errors raised by the laboratory operations.
#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("state {state:?} rejected: {reason}")]
    Rejection { state: Vec<f64>, reason: String },

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("unsupported geometry: {0}")]
    UnsupportedGeometry(String),

    #[error(
        "mollified state {state:?} at node {node} leaves the state domain of `{system}`; \
         extend the system to a compact range first"
    )]
    DomainViolation {
        system: String,
        node: usize,
        state: Vec<f64>,
    },

    #[error("unknown system `{0}`")]
    UnknownSystem(String),

    #[error("infinite shock speed in row {row}: temporal jump vanishes but spatial jump is {spatial_jump}")]
    InfiniteSpeed { row: usize, spatial_jump: f64 },

    #[error("row shock speeds disagree: {0:?}")]
    InconsistentSpeeds(Vec<Option<f64>>),

    #[error("test function support violation: {0}")]
    Support(String),

    #[error("field format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, LabError>;
