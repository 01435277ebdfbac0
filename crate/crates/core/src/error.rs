use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot decode {path}: {message}")]
    Decode { path: PathBuf, message: String },
    #[error("unsupported format in {path}: {message}")]
    UnsupportedFormat { path: PathBuf, message: String },
    #[error("{0}")]
    InvalidInput(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("empty mask")]
    EmptyMask,
    #[error("degenerate extent along {axis} axis: every masked pixel projects to a line")]
    DegenerateExtent { axis: &'static str },
    #[error("singular thin-plate spline system: {0}")]
    SingularSystem(String),
    #[error("undefined azimuth: view vector has no horizontal component")]
    UndefinedAzimuth,
    #[error("render failed: {0}")]
    Render(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// True for failures caused by the filesystem rather than by the inputs.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}
