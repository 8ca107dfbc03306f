use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("coincident points: {0}")]
    Coincident(String),

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("solver error: {0}")]
    Solver(String),

    #[error("probe {index} at ({x:.6}, {y:.6}, {z:.6}): {source}")]
    Probe {
        index: usize,
        x: f64,
        y: f64,
        z: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("bad magic in {0}")]
    BadMagic(PathBuf),

    #[error("unsupported format version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("truncated {what}: expected {expected} bytes, found {found}")]
    Truncated {
        what: &'static str,
        expected: u64,
        found: u64,
    },

    #[error("dimension overflow: {0}")]
    Overflow(String),

    #[error("malformed file: {0}")]
    Malformed(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::InvalidArgument(_) => 2,
            Error::Io { .. }
            | Error::BadMagic(_)
            | Error::Version { .. }
            | Error::Truncated { .. }
            | Error::Overflow(_)
            | Error::Malformed(_) => 4,
            _ => 3,
        }
    }
}
