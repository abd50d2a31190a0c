//! Workflows behind the `melan` binary.

pub mod config;
pub mod output;
pub mod report;
pub mod run;

use melan_core::MelanError;
use thiserror::Error;

pub use config::{Mode, Overrides, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Solver(#[from] MelanError),
    #[error("{0}")]
    NotConverged(String),
}

impl CliError {
    /// 1 for configuration problems, 2 when a hypothesis fails, 3 for
    /// numerical failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => 1,
            CliError::NotConverged(_) => 3,
            CliError::Solver(e) => match e {
                MelanError::Domain(_)
                | MelanError::InvalidLoad(_)
                | MelanError::InvalidGrid(_)
                | MelanError::InvalidParams(_)
                | MelanError::MissingCableLength => 1,
                MelanError::NotApplicable(_) | MelanError::InvalidPair(_) | MelanError::EnvelopeViolation { .. } => 2,
                _ => 3,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Config("x".into()).exit_code(), 1);
        assert_eq!(CliError::Solver(MelanError::MissingCableLength).exit_code(), 1);
        assert_eq!(CliError::Solver(MelanError::NotApplicable("x".into())).exit_code(), 2);
        assert_eq!(CliError::Solver(MelanError::NotConverged { iterations: 1, gap: 1.0 }).exit_code(), 3);
        assert_eq!(CliError::Solver(MelanError::SingularResonance { value: 0.0 }).exit_code(), 3);
    }
}
