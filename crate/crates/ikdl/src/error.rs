use std::path::{Path, PathBuf};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: line {line}, field {field}: {msg}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        field: usize,
        msg: String,
    },
    #[error("{}: non-finite value at row {row}, column {col}", path.display())]
    NonFinite { path: PathBuf, row: usize, col: usize },
    #[error("{}: {msg}", path.display())]
    Format { path: PathBuf, msg: String },
    #[error("{}: unsupported format version {found} (expected {expected})", path.display())]
    Version { path: PathBuf, found: u32, expected: u32 },
    #[error("{}: checksum mismatch, file is truncated or corrupt", path.display())]
    Checksum { path: PathBuf },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] ikdl_core::Error),
}

impl Error {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub(crate) fn format(path: &Path, msg: impl Into<String>) -> Self {
        Error::Format {
            path: path.to_path_buf(),
            msg: msg.into(),
        }
    }

    /// Process exit code: 3 for numerical failures, 2 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Core(e) if e.is_numerical() => 3,
            _ => 2,
        }
    }

    /// Short machine-readable category.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Parse { .. } | Error::NonFinite { .. } | Error::Format { .. } => "format",
            Error::Version { .. } => "version",
            Error::Checksum { .. } => "checksum",
            Error::Usage(_) => "usage",
            Error::Core(e) if e.is_numerical() => "numerical",
            Error::Core(_) => "input",
        }
    }
}
