use thiserror::Error;

/// Errors produced anywhere in the crate.
///
/// Every variant maps to a stable machine-readable [`Error::kind`] string that
/// the CLI and the C ABI surface to callers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("self-loop on node {0}")]
    SelfLoop(usize),
    #[error("node index {index} out of range for graph with {n} nodes")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("feature matrix has {got} rows, expected {expected}")]
    FeatureRowMismatch { expected: usize, got: usize },
    #[error("node {0} is isolated (degree 0)")]
    IsolatedNode(usize),
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("eigensolver did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
    #[error("basis is rank deficient (Gram condition estimate {cond:e})")]
    RankDeficient { cond: f64 },
    #[error("matrix is not symmetric (max asymmetry {asym:e})")]
    NotSymmetric { asym: f64 },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("a graph is required when phi is a GIN")]
    GraphRequired,
    #[error("unknown filter {0:?}")]
    UnknownFilter(String),
    #[error("value {value} is not within 1e-6 of an integer")]
    NonInteger { value: f64 },
    #[error("graph with {n} nodes exceeds oracle limit of {max}")]
    TooLarge { n: usize, max: usize },
    #[error("no phi parameters instantiated for eigenspace dimension {0}")]
    MissingMultiplicity(usize),
    #[error("unsupported checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable identifier used in structured error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::SelfLoop(_) => "SelfLoop",
            Error::IndexOutOfRange { .. } => "IndexOutOfRange",
            Error::FeatureRowMismatch { .. } => "FeatureRowMismatch",
            Error::IsolatedNode(_) => "IsolatedNode",
            Error::BadParams(_) => "BadParams",
            Error::Parse { .. } => "ParseError",
            Error::NoConvergence { .. } => "NoConvergence",
            Error::RankDeficient { .. } => "RankDeficient",
            Error::NotSymmetric { .. } => "NotSymmetric",
            Error::ShapeMismatch(_) => "ShapeMismatch",
            Error::NotSquare { .. } => "NotSquare",
            Error::GraphRequired => "GraphRequired",
            Error::UnknownFilter(_) => "UnknownFilter",
            Error::NonInteger { .. } => "NonInteger",
            Error::TooLarge { .. } => "TooLarge",
            Error::MissingMultiplicity(_) => "MissingMultiplicity",
            Error::Checkpoint(_) => "Checkpoint",
            Error::Io(_) => "Io",
            Error::Json(_) => "Json",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn shape_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::ShapeMismatch(msg.into()))
}
