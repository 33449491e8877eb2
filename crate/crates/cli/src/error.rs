use serde::Serialize;
use thiserror::Error;

/// Failure of a CLI run. Each variant has its own exit status.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Schema(String),
    #[error("{0}")]
    Capacity(String),
    #[error("{0}")]
    Gap(String),
    #[error("{0}")]
    Numeric(String),
}

/// Machine-readable error written to stderr.
#[derive(Debug, Serialize)]
pub struct ErrorRecord<'a> {
    pub error: &'a str,
    pub message: String,
    pub exit_code: i32,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Schema(_) => 2,
            CliError::Capacity(_) => 3,
            CliError::Gap(_) => 4,
            CliError::Numeric(_) => 5,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Io(_) => "io",
            CliError::Schema(_) => "schema",
            CliError::Capacity(_) => "capacity",
            CliError::Gap(_) => "gap_closure",
            CliError::Numeric(_) => "numeric",
        }
    }

    pub fn record(&self) -> String {
        serde_json::to_string(&ErrorRecord {
            error: self.kind(),
            message: self.to_string(),
            exit_code: self.exit_code(),
        })
        .expect("error records serialize")
    }
}

impl From<sshh::Error> for CliError {
    fn from(e: sshh::Error) -> Self {
        use sshh::Error as E;
        let msg = e.to_string();
        match e {
            E::InvalidArgument(_) | E::ZeroCoupling(_) => CliError::Schema(msg),
            E::Capacity { .. } => CliError::Capacity(msg),
            E::GapClosure { .. } | E::BandIdentification(_) => CliError::Gap(msg),
            E::Numeric(_) | E::NoFront { .. } => CliError::Numeric(msg),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
