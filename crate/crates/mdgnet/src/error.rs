use std::io;
use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] mdgnet_core::Error),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: not found", .0.display())]
    MissingInput(PathBuf),
    #[error("{}: {}: {message}", path.display(), line.map_or_else(|| "header".to_string(), |l| format!("line {l}")))]
    Malformed { path: PathBuf, line: Option<u64>, message: String },
    #[error("{}: no samples", .0.display())]
    NoSamples(PathBuf),
    #[error("{}: {source}", path.display())]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{}: schema version {found}, this build reads {expected}", path.display())]
    SchemaVersion { path: PathBuf, found: u32, expected: u32 },
    #[error("config: {0}")]
    Config(String),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    CheckFailed(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        let path = path.into();
        if source.kind() == io::ErrorKind::NotFound {
            Error::MissingInput(path)
        } else {
            Error::Io { path, source }
        }
    }

    /// Process exit status: 2 for usage errors, 1 for everything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Config(_) | Error::Usage(_) | Error::MissingInput(_) => 2,
            Error::Core(mdgnet_core::Error::TooFewSymbols { .. } | mdgnet_core::Error::InvalidConfig(_)) => 2,
            _ => 1,
        }
    }
}
