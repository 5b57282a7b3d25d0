use thiserror::Error;

/// Crate-wide error type. Variants mirror the failure modes of the material
/// algebra, the geometry layer, the solver and the configuration front end.
#[derive(Debug, Error)]
pub enum Error {
    #[error("positivity violation: {0}")]
    Positivity(String),
    #[error("metric error: {0}")]
    Metric(String),
    #[error("symmetry violation: {0}")]
    Symmetry(String),
    #[error("jacobian error: {0}")]
    Jacobian(String),
    #[error("conformality error: {0}")]
    Conformality(String),
    #[error("field derivative order error: {0}")]
    FieldOrder(String),
    #[error("degenerate slowness vector: {0}")]
    DegenerateSlowness(String),
    #[error("gauge error: {0}")]
    Gauge(String),
    #[error("corner node has no normal: {0}")]
    Corner(String),
    #[error("instability: {0}")]
    Stability(String),
    #[error("field evaluation error: {0}")]
    Field(String),
    #[error("unsupported dimension {0} (need 2 or 3)")]
    Dimension(usize),
    #[error("config error at `{path}`: {msg}")]
    Config { path: String, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(path: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            msg: msg.into(),
        }
    }

    /// Process exit code for the CLI: 2 for config problems, 3 for everything
    /// else that is not a numerical gate (gates are handled by the runner).
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } => 2,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
