use std::path::PathBuf;

/// Failures surfaced by the command-line tool, grouped by exit code.
#[derive(Debug, thiserror::Error)]
pub enum Failure {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Numeric(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] stop_core::Error),
}

impl Failure {
    /// 1 usage, 2 data, 3 numeric failure.
    pub fn exit_code(&self) -> i32 {
        use stop_core::Error as E;
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) | Failure::Io { .. } => 2,
            Failure::Numeric(_) => 3,
            Failure::Core(e) => match e {
                E::Parse { .. } | E::Parameter(_) | E::Schedule { .. } | E::UnsupportedMode(_) => 1,
                E::NonFinite(_) => 3,
                _ => 2,
            },
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Failure {
        let path = path.into();
        move |source| Failure::Io { path, source }
    }
}

pub type Result<T> = std::result::Result<T, Failure>;
