use std::path::{Path, PathBuf};

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const ACCEPTANCE_FAILED: i32 = 1;
    pub const INVALID_INPUT: i32 = 2;
    pub const CAPACITY: i32 = 3;
}

#[derive(Debug)]
pub enum CliError {
    /// Bad argument combination detected after parsing.
    Usage(String),
    /// Missing, unreadable or malformed input file.
    Input {
        path: PathBuf,
        reason: String,
    },
    /// Failure writing an output artifact.
    Output {
        path: PathBuf,
        reason: String,
    },
    Lab(rho_lab::Error),
}

impl CliError {
    pub fn input(path: &Path, reason: impl ToString) -> Self {
        CliError::Input {
            path: path.to_path_buf(),
            reason: reason.to_string(),
        }
    }

    pub fn output(path: &Path, reason: impl ToString) -> Self {
        CliError::Output {
            path: path.to_path_buf(),
            reason: reason.to_string(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Lab(rho_lab::Error::Capacity { .. }) => exit::CAPACITY,
            _ => exit::INVALID_INPUT,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "{msg}"),
            CliError::Input { path, reason } => write!(f, "{}: {reason}", path.display()),
            CliError::Output { path, reason } => {
                write!(f, "cannot write {}: {reason}", path.display())
            }
            CliError::Lab(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<rho_lab::Error> for CliError {
    fn from(e: rho_lab::Error) -> Self {
        CliError::Lab(e)
    }
}
