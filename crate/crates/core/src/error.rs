use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("degenerate spectrum: every singular value is zero")]
    DegenerateSpectrum,

    #[error("row {row} has no observed entries")]
    DegenerateRow { row: usize },

    #[error("curve points {t} and {} coincide; rotation angle undefined", t + 1)]
    DegenerateStep { t: usize },

    #[error("{reason}")]
    Degenerate { reason: String },

    /// Holds the node sets (0-based) of every connected component.
    #[error(
        "neighbor graph is disconnected into {} components of sizes {:?}; increase alpha",
        components.len(),
        components.iter().map(Vec::len).collect::<Vec<_>>()
    )]
    Disconnected { components: Vec<Vec<usize>> },

    #[error("non-finite value in layer {layer} ({what})")]
    Numeric { layer: usize, what: &'static str },

    #[error("indicator mask has no observed entries; completion is unconstrained")]
    Unconstrained,

    #[error("empty selection: {0}")]
    EmptySelection(String),

    #[error("line {line}: {msg}")]
    Parse { line: u64, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}
