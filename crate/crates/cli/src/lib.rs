//! Batch front end for `dimcert-core`.
//!
//! Every subcommand reads a JSON configuration, writes its artifacts
//! atomically into an output directory and finishes with a manifest
//! `manifest.<subcommand>.json` mapping each artifact to its SHA-256.
//!
//! Exit codes: 0 success, 1 I/O or internal failure, 2 configuration error
//! or missing input artifacts, 3 infeasible certificate, 4 numerical
//! divergence.

mod commands;
pub mod output;
pub mod report;

use std::path::PathBuf;

use dimcert_core::{ConfigError, Error as CoreError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use commands::{cmd_certify, cmd_simulate, cmd_spectrum, cmd_squeeze, load_config};
pub use output::{sha256_hex, write_atomic, OutputDir, RunManifest};
pub use report::cmd_report;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_DIVERGENCE: i32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subcommand {
    Certify,
    Simulate,
    Spectrum,
    Squeeze,
    Report,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Certify => "certify",
            Subcommand::Simulate => "simulate",
            Subcommand::Spectrum => "spectrum",
            Subcommand::Squeeze => "squeeze",
            Subcommand::Report => "report",
        }
    }
}

/// Everything a subcommand needs besides the configuration contents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Invocation {
    pub subcommand: Subcommand,
    /// Required by every subcommand except `report`.
    pub config: Option<PathBuf>,
    pub seed: u64,
    pub out: PathBuf,
    /// Worker threads; `None` lets rayon decide.
    pub parallel: Option<usize>,
    /// Write a field snapshot every this many steps (`simulate` only).
    pub snapshot_every: Option<usize>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),
    #[error("cannot read configuration {path}: {source}")]
    ConfigRead {
        path: String,
        source: std::io::Error,
    },
    #[error("missing input artifacts: {}", .0.join(", "))]
    MissingArtifacts(Vec<String>),
    #[error("malformed artifact {name}: {message}")]
    BadArtifact { name: String, message: String },
    #[error("numerical divergence at step {step} (t = {time})")]
    Divergence { step: usize, time: f64 },
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error(transparent)]
    Core(CoreError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Usage(String),
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Config(c) => CliError::Config(c),
            CoreError::Divergence { step, time } => CliError::Divergence { step, time },
            CoreError::Infeasible(m) => CliError::Infeasible(m),
            CoreError::Io(e) => CliError::Io(e),
            other => CliError::Core(other),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_)
            | CliError::ConfigRead { .. }
            | CliError::MissingArtifacts(_)
            | CliError::BadArtifact { .. }
            | CliError::Usage(_) => EXIT_CONFIG,
            CliError::Core(CoreError::UnsupportedDimension(_)) => EXIT_CONFIG,
            CliError::Infeasible(_) => EXIT_INFEASIBLE,
            CliError::Divergence { .. } => EXIT_DIVERGENCE,
            CliError::Core(_) | CliError::Io(_) | CliError::Json(_) => EXIT_FAILURE,
        }
    }
}

/// Result of a subcommand that ran to completion.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    /// `EXIT_OK`, or `EXIT_INFEASIBLE` when `certify` produced an
    /// infeasible certificate (artifacts are still written).
    pub exit_code: i32,
    pub manifest: RunManifest,
    /// Human-readable lines for the terminal.
    pub messages: Vec<String>,
}

/// Run a subcommand, inside a dedicated thread pool when `parallel` is set.
pub fn run(inv: &Invocation) -> Result<Outcome, CliError> {
    let go = || match inv.subcommand {
        Subcommand::Certify => cmd_certify(inv),
        Subcommand::Simulate => cmd_simulate(inv),
        Subcommand::Spectrum => cmd_spectrum(inv),
        Subcommand::Squeeze => cmd_squeeze(inv),
        Subcommand::Report => cmd_report(inv),
    };
    match inv.parallel {
        Some(0) => Err(CliError::Usage("--parallel must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Usage(e.to_string()))?
            .install(go),
        None => go(),
    }
}
