//! CLI failures and their exit codes.

use phononbus_core::Error as CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("physics domain error: {0}")]
    Domain(String),

    #[error("numerical error: {0}")]
    Convergence(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    /// Wrap a core error, naming the config key or section it came from.
    pub fn physics(key: &str, err: CoreError) -> Self {
        match err {
            CoreError::Convergence { .. } | CoreError::Truncation { .. } => {
                CliError::Convergence(format!("{key}: {err}"))
            }
            _ => CliError::Domain(format!("{key}: {err}")),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Domain(_) => 3,
            CliError::Convergence(_) => 4,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

/// Attach a section name to core results.
pub trait Context<T> {
    fn at(self, key: &str) -> Result<T, CliError>;
}

impl<T> Context<T> for Result<T, CoreError> {
    fn at(self, key: &str) -> Result<T, CliError> {
        self.map_err(|e| CliError::physics(key, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codes_are_distinct() {
        let codes = [
            CliError::Io(String::new()).exit_code(),
            CliError::Config(String::new()).exit_code(),
            CliError::physics("x", CoreError::NoCoupling).exit_code(),
            CliError::physics(
                "x",
                CoreError::Convergence {
                    value: 0.0,
                    error: 1.0,
                    tolerance: 0.1,
                },
            )
            .exit_code(),
        ];
        assert_eq!(codes, [1, 2, 3, 4]);
    }
}
