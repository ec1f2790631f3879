use std::fmt;

/// Failure class, which fixes the process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Config,
    Numeric,
    Io,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub kind: Kind,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self {
            kind: Kind::Config,
            message: message.into(),
        }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self {
            kind: Kind::Io,
            message: message.into(),
        }
    }

    /// Wraps a library error with the place it came from.
    pub fn from_core(context: &str, e: hemn::Error) -> Self {
        use hemn::Error as E;
        let kind = match &e {
            E::Config(_) | E::Domain { .. } => Kind::Config,
            E::Parse(_) => Kind::Io,
            _ => Kind::Numeric,
        };
        Self {
            kind,
            message: format!("{context}: {e}"),
        }
    }

    /// 3 config, 4 numeric or model failure, 5 I/O. Usage errors exit with 2
    /// before any of this runs.
    pub fn exit_code(&self) -> i32 {
        match self.kind {
            Kind::Config => 3,
            Kind::Numeric => 4,
            Kind::Io => 5,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}
