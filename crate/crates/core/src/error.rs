use thiserror::Error;

/// Errors produced by tableau construction, analysis and integration.
#[derive(Debug, Error)]
pub enum GarkError {
    #[error("invalid tableau shape: {0}")]
    Shape(String),

    #[error("non-finite coefficient in {0}")]
    NonFinite(String),

    #[error("component index {index} out of range for a tableau with {n} components")]
    ComponentOutOfRange { index: usize, n: usize },

    #[error("{0}")]
    Triangularity(String),

    #[error("unknown tableau '{0}'")]
    UnknownTableau(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("operation requires a two-component tableau, got {0} components")]
    NotTwoComponent(usize),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("stage dependency cycle through {0} stage nodes; fully coupled stages are not supported")]
    CyclicDependency(usize),

    #[error("Newton iteration failed for stage ({component}, {stage}) after {iterations} iterations (residual {residual:e})")]
    NewtonDivergence {
        component: usize,
        stage: usize,
        iterations: usize,
        residual: f64,
    },

    #[error("step {step} failed: {source}")]
    StepFailed {
        step: usize,
        #[source]
        source: Box<GarkError>,
    },

    #[error("convergence level {level} failed: {source}")]
    LevelFailed {
        level: usize,
        #[source]
        source: Box<GarkError>,
    },

    #[error("no stabilizing multiplier in [0, {search_max}] (minimum eigenvalue {min_eigenvalue:e} at the upper end)")]
    RadiusNotFound { search_max: f64, min_eigenvalue: f64 },

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, GarkError>;
