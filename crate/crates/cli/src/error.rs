use serde_json::json;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or configuration; exit code 2.
    Usage(String),
    /// Failure while running; exit code 1.
    Runtime { kind: &'static str, message: String },
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError::Usage(message.into())
    }

    pub fn io(path: &std::path::Path, e: std::io::Error) -> Self {
        CliError::Runtime {
            kind: "io",
            message: format!("cannot write {}: {e}", path.display()),
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime { .. } => 1,
        }
    }

    /// Single-line JSON for stderr.
    pub fn to_line(&self) -> String {
        let value = match self {
            CliError::Usage(message) => json!({"error": "usage", "message": message}),
            CliError::Runtime { kind, message } => json!({"error": kind, "message": message}),
        };
        value.to_string()
    }
}

impl From<svddbw_core::Error> for CliError {
    fn from(e: svddbw_core::Error) -> Self {
        CliError::Runtime {
            kind: e.kind(),
            message: e.to_string(),
        }
    }
}
