use plap_curves::curve::CurveError;
use plap_curves::{IvpError, ModelError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("{0} verification rows failed")]
    Verification(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) | CliError::Verification(_) => 1,
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Invalid(e.to_string())
    }
}

impl From<IvpError> for CliError {
    fn from(e: IvpError) -> Self {
        match e {
            IvpError::Model(_) | IvpError::Config(_) | IvpError::Domain(_) => {
                CliError::Invalid(e.to_string())
            }
            IvpError::StepUnderflow { .. } | IvpError::MaxSteps { .. } => {
                CliError::Numerical(e.to_string())
            }
        }
    }
}

impl From<CurveError> for CliError {
    fn from(e: CurveError) -> Self {
        match e {
            CurveError::Ivp(inner) => inner.into(),
            CurveError::Model(inner) => inner.into(),
            CurveError::EmptyRange(_) | CurveError::Domain(_) => CliError::Invalid(e.to_string()),
            CurveError::ClassMismatch { .. } => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Numerical(format!("serialization failed: {e}"))
    }
}
