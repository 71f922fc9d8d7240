use std::fmt;
use std::io;
use std::path::PathBuf;

/// A problem tied to one line (1-based) of an input file.
#[derive(Debug, Clone, PartialEq)]
pub struct LineError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for LineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("{}", render_lines(.path, .errors))]
    Input {
        path: PathBuf,
        errors: Vec<LineError>,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{0}")]
    Embedding(String),

    #[error("data leakage: {0}")]
    Leakage(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),
}

fn render_lines(path: &std::path::Path, errors: &[LineError]) -> String {
    let mut out = format!("{}: {} error(s)", path.display(), errors.len());
    for e in errors {
        out.push_str("\n  ");
        out.push_str(&e.to_string());
    }
    out
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Process exit code: 2 for internal invariant violations, 1 for everything
    /// caused by inputs.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Invariant(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
