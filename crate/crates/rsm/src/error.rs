use std::path::PathBuf;

use rsm_core::Error as CoreError;

/// Process exit codes. These values are a stable contract.
pub mod exit {
    pub const SUCCESS: u8 = 0;
    pub const INTERNAL: u8 = 1;
    pub const INPUT: u8 = 2;
    pub const RANK: u8 = 3;
    pub const NON_UNIQUE: u8 = 4;
    pub const DEGENERATE: u8 = 5;
    pub const SIMULATION: u8 = 6;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    /// Malformed CSV, TOML or flag values.
    #[error("{0}")]
    Input(String),
    #[error("{context}: {source}")]
    Core {
        context: &'static str,
        #[source]
        source: CoreError,
    },
}

impl CliError {
    pub fn input(msg: impl Into<String>) -> Self {
        Self::Input(msg.into())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Io { .. } | Self::Input(_) => exit::INPUT,
            Self::Core { source, .. } => core_exit_code(source),
        }
    }
}

pub fn core_exit_code(e: &CoreError) -> u8 {
    match e {
        CoreError::RankDeficient { .. } | CoreError::InsufficientDof { .. } => exit::RANK,
        CoreError::NonUniqueMinimizer => exit::NON_UNIQUE,
        CoreError::DegenerateComplementarity { .. } | CoreError::SingularBorder => exit::DEGENERATE,
        CoreError::TruthDegenerate(_) | CoreError::ExcessiveFailures { .. } => exit::SIMULATION,
        CoreError::NumericalFailure(_) | CoreError::StepTooSmall | CoreError::ActivityChanged => {
            exit::INTERNAL
        }
        CoreError::OrderingMismatch => exit::INTERNAL,
        _ => exit::INPUT,
    }
}

/// Attaches a short description of the failing stage to core errors.
pub trait Context<T> {
    fn context(self, what: &'static str) -> Result<T, CliError>;
}

impl<T> Context<T> for Result<T, CoreError> {
    fn context(self, what: &'static str) -> Result<T, CliError> {
        self.map_err(|source| CliError::Core {
            context: what,
            source,
        })
    }
}

pub type CliResult<T> = Result<T, CliError>;
