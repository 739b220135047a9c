use thiserror::Error;

/// Exit code for a completed run.
pub const EXIT_OK: i32 = 0;
/// Exit code when the input violates a domain condition.
pub const EXIT_VIOLATION: i32 = 1;
/// Exit code for I/O, parse and usage errors.
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {message}\nexpected {schema}")]
    Input {
        path: String,
        message: String,
        schema: &'static str,
    },

    #[error("{0}")]
    Usage(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Core(#[from] fibersim::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(fibersim::Error::Io(_) | fibersim::Error::Json(_)) => EXIT_INPUT,
            CliError::Core(_) => EXIT_VIOLATION,
            _ => EXIT_INPUT,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
