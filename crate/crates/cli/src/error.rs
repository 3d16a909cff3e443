use thiserror::Error;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("numerical non-convergence: {0}")]
    NonConvergence(String),
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        CliError::Io { path: path.as_ref().display().to_string(), source }
    }

    /// 0 success, 2 config or i/o, 3 hypothesis, 4 non-convergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => 2,
            CliError::Hypothesis(_) => 3,
            CliError::NonConvergence(_) => 4,
        }
    }
}

impl From<shear_spectra::Error> for CliError {
    fn from(e: shear_spectra::Error) -> Self {
        use shear_spectra::Error as E;
        match e {
            E::Domain(m) | E::Config(m) => CliError::Config(m),
            E::Hypothesis(m) => CliError::Hypothesis(m),
            E::NonConvergence(m) => CliError::NonConvergence(m),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io { path: "<csv>".into(), source: std::io::Error::other(e.to_string()) }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Config(format!("json: {e}"))
    }
}
