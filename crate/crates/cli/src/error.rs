use std::fmt;

use thiserror::Error;

/// Pipeline step in which a command failed; printed with every error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    Ingestion,
    Preprocessing,
    Training,
    Attribution,
    Export,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Config => "config",
            Stage::Ingestion => "ingestion",
            Stage::Preprocessing => "preprocessing",
            Stage::Training => "training",
            Stage::Attribution => "attribution",
            Stage::Export => "export",
        })
    }
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad invocation: flags, config files or values that can never work.
    #[error("{message}")]
    Usage { stage: Stage, message: String },

    #[error("{source}")]
    Pipeline {
        stage: Stage,
        #[source]
        source: emolatent::Error,
    },
}

impl CliError {
    pub fn usage(stage: Stage, message: impl Into<String>) -> Self {
        CliError::Usage {
            stage,
            message: message.into(),
        }
    }

    pub fn stage(&self) -> Stage {
        match self {
            CliError::Usage { stage, .. } | CliError::Pipeline { stage, .. } => *stage,
        }
    }

    /// 1 for usage errors, 3 for numerical failures, 2 for everything the
    /// data is to blame for.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage { .. } => EXIT_USAGE,
            CliError::Pipeline { source, .. } if source.is_numerical() => EXIT_NUMERICAL,
            CliError::Pipeline { .. } => EXIT_DATA,
        }
    }
}

/// Attaches a stage to library errors.
pub trait StageExt<T> {
    fn stage(self, stage: Stage) -> Result<T, CliError>;
}

impl<T> StageExt<T> for emolatent::Result<T> {
    fn stage(self, stage: Stage) -> Result<T, CliError> {
        self.map_err(|source| CliError::Pipeline { stage, source })
    }
}
