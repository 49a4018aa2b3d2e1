use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Solver(#[from] fastreact::Error),

    #[error("input error: {0}")]
    Input(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Process exit code: 2 configuration, 3 solver, 4 input file, 5 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver(fastreact::Error::Io(_)) => 5,
            CliError::Solver(fastreact::Error::Csv(_)) => 4,
            CliError::Solver(_) => 3,
            CliError::Input(_) => 4,
            CliError::Io { .. } => 5,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
