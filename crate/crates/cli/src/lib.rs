//! Configuration, export and subcommand plumbing behind the `mberjidf` binary.

use std::path::{Path, PathBuf};

use thiserror::Error;

pub mod config;
pub mod export;

pub use config::{parse_config, render, resolve, ConfigFile, Overrides};
pub use export::{run_and_export, RunManifest};

/// Environment variable holding the default worker thread count.
pub const THREADS_ENV: &str = "MBERJIDF_THREADS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("line {line}: expected `key = value`, got {text:?}")]
    Syntax { line: usize, text: String },

    #[error("unknown key `{0}`")]
    UnknownKey(String),

    #[error("duplicate key `{key}` on line {line} (first set on line {first})")]
    Duplicate {
        key: String,
        first: usize,
        line: usize,
    },

    #[error("{key}: {reason}")]
    Value { key: String, reason: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] mberjidf::Error),
}

impl CliError {
    pub fn value(key: impl Into<String>, reason: impl Into<String>) -> Self {
        CliError::Value {
            key: key.into(),
            reason: reason.into(),
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}
