use std::fmt;

use spatter::eval::EvalError;
use spatter::features::FeatureError;
use spatter::io::DataError;
use spatter::model::ModelError;
use spatter::pipeline::PipelineError;

/// CLI failure classified by exit code.
///
/// Exit codes: 1 for usage problems (bad flags, bad config values),
/// 2 for input problems (missing or unreadable files, malformed tables),
/// 3 for numeric failures inside the computation itself.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Input(String),
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Input(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "usage error: {msg}"),
            CliError::Input(msg) => write!(f, "input error: {msg}"),
            CliError::Numeric(msg) => write!(f, "numeric error: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Numeric(e.to_string())
    }
}

impl From<FeatureError> for CliError {
    fn from(e: FeatureError) -> Self {
        CliError::Numeric(e.to_string())
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            // Shape problems in the provided tables are input errors; failures
            // while fitting or scoring are numeric; bad zone bounds or coverage
            // come from flags or the config file, so they count as usage.
            EvalError::Model(inner) => CliError::Numeric(inner.to_string()),
            EvalError::InvalidZone { .. } | EvalError::InvalidCoverage { .. } => {
                CliError::Usage(e.to_string())
            }
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Image { .. } => CliError::Input(e.to_string()),
            PipelineError::InvalidConfig(_) => CliError::Usage(e.to_string()),
            other => CliError::Numeric(other.to_string()),
        }
    }
}
