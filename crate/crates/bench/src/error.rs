use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Malformed { path: PathBuf, line: usize, message: String },
    #[error("no CSV files in {0}")]
    EmptyDirectory(PathBuf),
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] multistep::Error),
    #[error("writing {path}: {message}")]
    Write { path: PathBuf, message: String },
}

pub type BenchResult<T> = std::result::Result<T, BenchError>;

impl BenchError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }
}
