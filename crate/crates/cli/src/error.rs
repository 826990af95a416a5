use std::path::PathBuf;

use ahprec::ahp::AhpError;
use ahprec::contextfilter::QueryError;
use ahprec::eval::EvalError;
use ahprec::ingest::IngestError;
use ahprec::pipeline::PipelineError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Domain(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Domain(_) => 1,
            CliError::Io { .. } => 3,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        match e {
            IngestError::Io { path, source } => CliError::Io { path, source },
            other => CliError::Domain(other.to_string()),
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Io { path, source } => CliError::Io { path, source },
            other => CliError::Domain(other.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Ingest(e) => e.into(),
            EvalError::Pipeline(e) => e.into(),
            other => CliError::Domain(other.to_string()),
        }
    }
}

impl From<AhpError> for CliError {
    fn from(e: AhpError) -> Self {
        CliError::Domain(e.to_string())
    }
}

impl From<QueryError> for CliError {
    fn from(e: QueryError) -> Self {
        CliError::Domain(format!("context: {e}"))
    }
}
