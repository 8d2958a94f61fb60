use std::path::PathBuf;

use hardy_core::HardyError;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Hardy(#[from] HardyError),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("cannot parse config {path}: {source}")]
    ConfigParse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot encode report: {0}")]
    Encode(String),
}

impl CliError {
    /// Stable machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Hardy(e) => match e {
                HardyError::InvalidParams(_) => "invalid_params",
                HardyError::InvalidCone(_) => "invalid_cone",
                HardyError::Inadmissible(_) => "inadmissible",
                HardyError::NonIntegrableWeight { .. } => "non_integrable_weight",
                HardyError::Unsupported(_) => "unsupported",
                HardyError::InvalidArgument(_) => "invalid_argument",
                _ => "solver",
            },
            CliError::Config(_) | CliError::ConfigParse { .. } => "config",
            CliError::Io { .. } => "io",
            CliError::Encode(_) => "encode",
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } => 3,
            _ => 2,
        }
    }

    /// `{"schema": 1, "error": {"kind": ..., "message": ...}}`.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Body<'a> {
            kind: &'a str,
            message: String,
        }
        #[derive(Serialize)]
        struct Envelope<'a> {
            schema: u32,
            error: Body<'a>,
        }
        let env = Envelope {
            schema: crate::report::SCHEMA,
            error: Body {
                kind: self.kind(),
                message: self.to_string(),
            },
        };
        serde_json::to_string(&env).expect("error envelope serializes")
    }
}
