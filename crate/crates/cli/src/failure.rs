use thiserror::Error;

/// Command failure, classified by exit code.
#[derive(Debug, Error)]
pub enum Failure {
    /// Bad input: malformed files, invalid flags, failed preconditions.
    #[error("{0}")]
    Validation(String),
    /// A computed quantity did not pass its check.
    #[error("{0}")]
    Certification(String),
    #[error("{0}")]
    Io(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 2,
            Failure::Certification(_) => 3,
            Failure::Io(_) => 4,
        }
    }
}

impl From<tuckerlite::Error> for Failure {
    fn from(e: tuckerlite::Error) -> Self {
        match e {
            tuckerlite::Error::Reconstruction { .. } => Failure::Certification(e.to_string()),
            other => Failure::Validation(other.to_string()),
        }
    }
}
