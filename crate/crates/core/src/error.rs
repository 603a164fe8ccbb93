use std::path::Path;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid angular momentum: {0}")]
    AngularMomentum(String),

    #[error("atomic data: {0}")]
    AtomicData(String),

    #[error("trapping light too close to resonance: {0}")]
    Resonance(String),

    #[error("no guided mode: {0}")]
    NoGuidedMode(String),

    #[error("grid too coarse: {0}")]
    CoarseGrid(String),

    #[error("field map: {0}")]
    FieldMap(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("missing field data: {0}")]
    MissingField(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("configuration: {0}")]
    Config(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Coarse classification used for exit codes and HTTP status mapping.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Physics,
    Io,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::AngularMomentum(_)
            | Error::AtomicData(_)
            | Error::Config(_)
            | Error::InvalidArgument(_)
            | Error::GridMismatch(_)
            | Error::Json(_) => ErrorKind::Config,
            Error::Resonance(_)
            | Error::NoGuidedMode(_)
            | Error::CoarseGrid(_)
            | Error::Quadrature(_) => ErrorKind::Physics,
            Error::FieldMap(_)
            | Error::ShapeMismatch(_)
            | Error::MissingField(_)
            | Error::Io { .. } => ErrorKind::Io,
        }
    }

    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Error::Io {
            context: path.display().to_string(),
            source,
        }
    }
}
