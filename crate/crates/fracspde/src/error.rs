use std::io;

use fracspde_core::Error as CoreError;
use serde::Serialize;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, RunError>;

/// Failure of a run, classified by the exit code it maps to.
#[derive(Debug, Error)]
pub enum RunError {
    #[error("config: {0}")]
    Config(String),

    /// Blow-up, non-convergence or a degenerate estimate; `member` is the
    /// ensemble index when the failure belongs to one sample.
    #[error("numerical{}: {source}", member.map(|m| format!(" (member {m})")).unwrap_or_default())]
    Numerical {
        #[source]
        source: CoreError,
        member: Option<usize>,
    },

    #[error("io: {context}: {source}")]
    Io {
        context: String,
        #[source]
        source: io::Error,
    },
}

impl RunError {
    pub fn io(context: impl Into<String>, source: io::Error) -> Self {
        RunError::Io {
            context: context.into(),
            source,
        }
    }

    pub fn in_member(self, index: usize) -> Self {
        match self {
            RunError::Numerical { source, .. } => RunError::Numerical {
                source,
                member: Some(index),
            },
            other => other,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Numerical { .. } => 3,
            RunError::Io { .. } => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            RunError::Config(_) => "config",
            RunError::Numerical { .. } => "numerical",
            RunError::Io { .. } => "io",
        }
    }

    /// One-line JSON record for the error stream.
    pub fn record(&self, command: &str) -> String {
        #[derive(Serialize)]
        struct Record<'a> {
            error: &'a str,
            command: &'a str,
            exit_code: i32,
            message: String,
        }
        serde_json::to_string(&Record {
            error: self.kind(),
            command,
            exit_code: self.exit_code(),
            message: self.to_string(),
        })
        .expect("record serializes")
    }
}

impl From<CoreError> for RunError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Domain(m) | CoreError::Config(m) => RunError::Config(m),
            other => RunError::Numerical {
                source: other,
                member: None,
            },
        }
    }
}
