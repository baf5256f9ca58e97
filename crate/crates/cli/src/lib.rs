//! Experiment dispatch and bit-exact artifact emission for the four
//! experiment families (`medirl`, `ada`, `iada`, `matl`).
//!
//! A run consumes one JSON [`config::ExperimentConfig`] and emits CSV
//! metrics, PGM heatmaps, JSONL trajectories, model snapshots, and a
//! manifest listing every file with its SHA-256 — all bytes a pure
//! function of (config, seed).

pub mod artifacts;
pub mod config;
pub mod pgm;
pub mod run;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] xfer_lab_core::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("verification failed: {0}")]
    Verify(String),
}

pub type Result<T> = std::result::Result<T, CliError>;
