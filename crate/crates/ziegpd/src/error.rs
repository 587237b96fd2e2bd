use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Model(#[from] ziegpd_core::Error),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    /// Malformed input at a 1-based line number.
    #[error("{}:{line}: {msg}", path.display())]
    Parse {
        path: PathBuf,
        line: u64,
        msg: String,
    },

    #[error("{}: file contains no records", path.display())]
    Empty { path: PathBuf },

    #[error("invalid parameters: {0}")]
    Params(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{0}")]
    Usage(String),

    #[error("study {study}: {failed} of {total} {method} fits failed")]
    StudyFailed {
        study: String,
        method: String,
        failed: usize,
        total: usize,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Model(e) if e.is_numerical() => "numerical",
            Error::Model(ziegpd_core::Error::Domain(_)) => "domain",
            Error::Model(_) => "data",
            Error::Io { .. } => "io",
            Error::Parse { .. } | Error::Empty { .. } => "parse",
            Error::Params(_) => "params",
            Error::Config(_) => "config",
            Error::Usage(_) => "usage",
            Error::StudyFailed { .. } => "numerical",
        }
    }

    /// Process exit code: 2 for failures of the numerical procedures or of a
    /// fit on valid input, 1 for usage, IO and format errors.
    pub fn exit_code(&self) -> u8 {
        match self.kind() {
            "numerical" | "data" => 2,
            _ => 1,
        }
    }
}
