use serde_json::{json, Value};

/// Failure classes of a run, each with its own exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags or parameter combinations.
    Usage(String),
    Library(blockdl::Error),
    /// Cannot read an input file.
    Input(String),
    /// Cannot write an output.
    Output(String),
    /// Checks ran and at least one failed.
    Validation(String),
}

impl From<blockdl::Error> for CliError {
    fn from(e: blockdl::Error) -> Self {
        CliError::Library(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Library(e) if e.is_data_error() => 2,
            CliError::Input(_) | CliError::Output(_) => 2,
            CliError::Library(_) => 3,
            CliError::Validation(_) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Library(e) => e.kind(),
            CliError::Input(_) => "input",
            CliError::Output(_) => "output",
            CliError::Validation(_) => "validation-failure",
        }
    }

    pub fn message(&self) -> String {
        match self {
            CliError::Usage(m) | CliError::Input(m) | CliError::Output(m) | CliError::Validation(m) => m.clone(),
            CliError::Library(e) => e.to_string(),
        }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "error": {
                "kind": self.kind(),
                "message": self.message(),
                "exit_code": self.exit_code(),
            }
        })
    }
}
