use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error in '{key}': {message}")]
    Config { key: String, message: String },
    #[error("numerical error: {0}")]
    Numerical(otoc_core::Error),
    #[error("unresolved extremum for {member}: optimum at g/g_c = {ratio} sits on the search boundary; widen the search range")]
    Unresolved { member: String, ratio: f64 },
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn config(key: &str, message: impl Into<String>) -> Self {
        CliError::Config {
            key: key.to_string(),
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::Io { .. } => 2,
            CliError::Numerical(_) => 3,
            CliError::Unresolved { .. } => 4,
        }
    }
}

impl From<otoc_core::Error> for CliError {
    fn from(e: otoc_core::Error) -> Self {
        match e.root() {
            otoc_core::Error::Parameter(m) => CliError::config("parameters", format!("{e} ({m})")),
            _ => CliError::Numerical(e),
        }
    }
}
