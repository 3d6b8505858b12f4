use std::fmt;

/// A failure reported as one `CODE: message` line on stderr.
#[derive(Debug)]
pub struct CliError {
    pub code: &'static str,
    pub message: String,
}

impl CliError {
    pub fn new(code: &'static str, message: impl Into<String>) -> Self {
        CliError {
            code,
            message: message.into(),
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        CliError::new("E-USAGE", message)
    }

    pub fn exit_code(&self) -> i32 {
        if self.code == "E-USAGE" {
            2
        } else {
            1
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Keep the report on a single line.
        write!(f, "{}: {}", self.code, self.message.replace('\n', " "))
    }
}

impl From<grex::Error> for CliError {
    fn from(e: grex::Error) -> Self {
        CliError::new(e.code(), e.to_string())
    }
}
