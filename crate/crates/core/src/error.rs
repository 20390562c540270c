use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("exponents are undefined for the critical case q = p - 1")]
    CriticalExponents,

    #[error("operation requires a constant modulus lambda0")]
    NonConstantModulus,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{coordinate} = {value} lies outside the domain of {kind} ({reason})")]
    Domain {
        kind: &'static str,
        coordinate: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("stencil of half-width {reach} straddles the free boundary (distance {distance})")]
    NearFreeBoundary { distance: f64, reach: f64 },

    #[error("sample grid is empty")]
    EmptyGrid,

    #[error("non-finite value {value} at node {index} (t = {time})")]
    NonFinite { index: usize, time: f64, value: f64 },

    #[error("time step {dt:e} underflowed at t = {time}; gradient blow-up")]
    DtUnderflow { time: f64, dt: f64 },

    #[error("solver failed at t = {time}: {source}")]
    Run {
        time: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("region leaves the stored data: {0}")]
    OutsideHistory(String),

    #[error("unresolvable scale: {0}")]
    Unresolvable(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("too few usable radii: {usable} (need {needed})")]
    TooFewRadii { usable: usize, needed: usize },

    #[error("{stage} failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error("output directory {0} already exists (use --force to overwrite)")]
    OutputExists(String),

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Wraps an error with the name of the pipeline stage that produced it.
    pub fn in_stage(self, stage: impl Into<String>) -> Self {
        Error::Stage {
            stage: stage.into(),
            source: Box::new(self),
        }
    }

    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }
}
