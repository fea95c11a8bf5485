use thiserror::Error;

/// Errors raised across the discovery pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid field: {0}")]
    InvalidField(String),
    #[error("invalid system spec: {0}")]
    InvalidSystem(String),
    #[error("time step {dt:e} exceeds the stability limit {limit:e} of the {scheme} scheme")]
    StabilityViolation { scheme: &'static str, dt: f64, limit: f64 },
    #[error("unsupported combination: {0}")]
    UnsupportedCombination(String),
    #[error("grid too small: {0}")]
    GridTooSmall(String),
    #[error("polynomial window of {window} points does not fit an axis of {len} points")]
    WindowTooLarge { window: usize, len: usize },
    #[error("rank-deficient polynomial fit (degree {degree}, window {window})")]
    DegenerateFit { degree: usize, window: usize },
    #[error("no rows left after trimming {0} boundary points")]
    EmptyAfterTrim(usize),
    #[error("cannot take {requested} rows from a problem with {available}")]
    TooManyRows { requested: usize, available: usize },
    #[error("singular system: {0}")]
    SingularSystem(String),
    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),
    #[error("unknown term label `{0}`")]
    UnresolvableLabel(String),
    #[error("{rejected} of {total} posterior samples were unstable")]
    UnstableSample { rejected: usize, total: usize },
    #[error("invalid config: {0}")]
    Config(String),
    #[error("malformed input: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
