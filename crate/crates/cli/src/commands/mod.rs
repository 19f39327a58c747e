//! Shared command context, error-to-exit-code mapping, and small I/O
//! helpers.

pub mod augment;
pub mod diffro;
pub mod eval_cmd;
pub mod pipeline;
pub mod tokenize;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use tokenforge_core::Error as CoreError;

/// Exit codes: 0 success, 1 usage, 2 config/validation, 3 I/O, 4 missing
/// adapter, 5 numeric divergence.
#[derive(Debug)]
pub struct CliError {
    message: String,
    code: u8,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
            code: 2,
        }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
            code: 3,
        }
    }

    pub fn report(&self) -> ExitCode {
        eprintln!("tokenforge: {}", self.message);
        ExitCode::from(self.code)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.message.fmt(f)
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let code = match &e {
            CoreError::MissingAdapter(_) => 4,
            CoreError::Divergence { .. } => 5,
            CoreError::Io(_) | CoreError::Wav(_) => 3,
            _ => 2,
        };
        Self {
            message: e.to_string(),
            code,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::io(e.to_string())
    }
}

/// Global flags resolved once in `main`.
pub struct Context {
    pub config: Option<PathBuf>,
    pub seed: u64,
    /// Whether `--seed` was passed explicitly (it then beats config seeds).
    pub seed_explicit: bool,
    pub jobs: usize,
    pub verbose: u8,
}

impl Context {
    pub fn require_config(&self) -> Result<&Path, CliError> {
        self.config
            .as_deref()
            .ok_or_else(|| CliError::config("this subcommand requires --config"))
    }

    pub fn log(&self, message: impl AsRef<str>) {
        if self.verbose > 0 {
            eprintln!("tokenforge: {}", message.as_ref());
        }
    }
}

pub fn read_to_string(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::io(format!("cannot read {}: {e}", path.display())))
}

pub fn open_reader(path: &Path) -> Result<std::io::BufReader<std::fs::File>, CliError> {
    let file = std::fs::File::open(path)
        .map_err(|e| CliError::io(format!("cannot open {}: {e}", path.display())))?;
    Ok(std::io::BufReader::new(file))
}

pub fn create_writer(path: &Path) -> Result<std::io::BufWriter<std::fs::File>, CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| CliError::io(format!("cannot create {}: {e}", parent.display())))?;
        }
    }
    let file = std::fs::File::create(path)
        .map_err(|e| CliError::io(format!("cannot create {}: {e}", path.display())))?;
    Ok(std::io::BufWriter::new(file))
}
