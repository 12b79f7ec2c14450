use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Solver(batched_eig::Error),
    #[error("verification failed: {0}")]
    Verification(String),
}

impl CliError {
    /// 1 verification failure, 2 usage, 3 I/O or malformed input file.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Verification(_) | CliError::Solver(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl From<batched_eig::Error> for CliError {
    fn from(e: batched_eig::Error) -> Self {
        use batched_eig::Error as E;
        match e {
            E::Io(_)
            | E::BadMagic { .. }
            | E::UnsupportedVersion(_)
            | E::TruncatedPayload { .. }
            | E::DimMismatch(_) => CliError::Io(e.to_string()),
            E::InvalidConfig(_) | E::BlockTooLarge { .. } => CliError::Usage(e.to_string()),
            other => CliError::Solver(other),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
