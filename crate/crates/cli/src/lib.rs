//! File formats and subcommand implementations behind the `gsqg` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::{Path, PathBuf};

pub mod commands;
pub mod config;
pub mod io;
pub mod metadata;

pub use config::RunConfig;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Core(#[from] gsqg_core::Error),
    /// A verification suite ran and reported failures.
    #[error("{0}")]
    Check(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.display().to_string(), source }
    }

    pub fn csv(path: &Path, e: csv::Error) -> Self {
        if e.is_io_error() {
            match e.into_kind() {
                csv::ErrorKind::Io(source) => return Self::io(path, source),
                _ => unreachable!("io error kind"),
            }
        }
        CliError::Format(format!("{}: {e}", path.display()))
    }

    /// 2 for numerical failures, 1 for everything the user can fix by
    /// changing the input.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_numerical() => 2,
            CliError::Check(_) => 2,
            _ => 1,
        }
    }
}

/// `prefix` with `suffix` appended to its file name.
pub fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut name = prefix.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(suffix);
    prefix.with_file_name(name)
}

/// Output prefix: `out` when given, else the config path without extension.
pub fn output_prefix(config: &Path, out: Option<&Path>) -> PathBuf {
    out.map(Path::to_path_buf).unwrap_or_else(|| config.with_extension(""))
}
