//! Deterministic artifact emission: CSV metrics, JSONL records, model
//! snapshots, and a manifest tying every emitted file to its SHA-256.
//!
//! Float formatting everywhere uses Rust's shortest round-trip `Display`,
//! so identical runs produce identical bytes.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use xfer_lab_core::ada::StageMetrics;
use xfer_lab_core::matl::MatlHistory;
use xfer_lab_core::mdp::{GridWorld, Trajectory};
use xfer_lab_core::medirl::TrainHistory;

use crate::config::ExperimentConfig;
use crate::{CliError, Result};

/// Collects files as they are written and finalizes the manifest.
pub struct ArtifactWriter {
    out_dir: PathBuf,
    files: Vec<ManifestFile>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestFile {
    pub path: String,
    pub sha256: String,
}

/// The persisted run record: the full effective config plus every
/// emitted file with its content hash.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: ExperimentConfig,
    pub files: Vec<ManifestFile>,
}

/// Paths produced by a completed run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunArtifacts {
    pub out_dir: PathBuf,
    pub manifest_path: PathBuf,
    pub files: Vec<ManifestFile>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl ArtifactWriter {
    pub fn new(out_dir: &Path) -> Result<Self> {
        fs::create_dir_all(out_dir)?;
        Ok(ArtifactWriter {
            out_dir: out_dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn out_dir(&self) -> &Path {
        &self.out_dir
    }

    /// Writes one artifact and records its hash under its relative name.
    pub fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.out_dir.join(name);
        fs::write(&path, contents)?;
        self.files.push(ManifestFile {
            path: name.to_string(),
            sha256: sha256_hex(contents.as_bytes()),
        });
        Ok(())
    }

    /// Writes `manifest.json` and returns the artifact set.
    pub fn finalize(mut self, config: &ExperimentConfig) -> Result<RunArtifacts> {
        self.files.sort_by(|a, b| a.path.cmp(&b.path));
        let manifest = Manifest {
            config: config.clone(),
            files: self.files.clone(),
        };
        let manifest_path = self.out_dir.join("manifest.json");
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        fs::write(&manifest_path, text)?;
        Ok(RunArtifacts {
            out_dir: self.out_dir,
            manifest_path,
            files: self.files,
        })
    }
}

/// Re-hashes every file named by a manifest; returns the mismatches.
pub fn verify_manifest(manifest_path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(manifest_path)?;
    let manifest: Manifest =
        serde_json::from_str(&text).map_err(|e| CliError::Verify(e.to_string()))?;
    let base = manifest_path
        .parent()
        .ok_or_else(|| CliError::Verify("manifest has no parent directory".into()))?;
    let mut mismatches = Vec::new();
    for file in &manifest.files {
        let path = base.join(&file.path);
        match fs::read(&path) {
            Ok(bytes) => {
                if sha256_hex(&bytes) != file.sha256 {
                    mismatches.push(format!("{}: hash mismatch", file.path));
                }
            }
            Err(e) => mismatches.push(format!("{}: {e}", file.path)),
        }
    }
    Ok(mismatches)
}

/// Shortest round-trip float text (Rust `Display`).
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

pub fn medirl_metrics_csv(history: &TrainHistory) -> String {
    let mut out = String::from("iter,nll,grad_norm,evd\n");
    for r in &history.records {
        let evd = r.evd.map(fmt_f64).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{evd}\n",
            r.iteration,
            fmt_f64(r.nll),
            fmt_f64(r.grad_norm)
        ));
    }
    out
}

pub fn ada_stages_csv(stages: &[StageMetrics], seed: u64) -> String {
    let mut out = String::from("stage,rotation_deg,src_acc,tgt_acc,baseline_tgt_acc,seed\n");
    for s in stages {
        out.push_str(&format!(
            "{},{},{},{},{},{seed}\n",
            s.stage,
            fmt_f64(s.rotation_deg),
            fmt_f64(s.src_acc),
            fmt_f64(s.tgt_acc),
            fmt_f64(s.baseline_tgt_acc)
        ));
    }
    out
}

pub fn matl_history_csv(history: &MatlHistory) -> String {
    let mut out = String::from(
        "iter,mode,sim_return,real_return,success_rate,disc_acc,aux_mean_sim,aux_mean_real,seed\n",
    );
    for r in &history.records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.iter,
            history.mode.as_str(),
            fmt_f64(r.sim_return),
            fmt_f64(r.real_return),
            fmt_f64(r.success_rate),
            fmt_f64(r.disc_acc),
            fmt_f64(r.aux_mean_sim),
            fmt_f64(r.aux_mean_real),
            history.seed
        ));
    }
    out
}

#[derive(Debug, Serialize)]
struct TrajectoryLine<'a> {
    states: &'a [usize],
    actions: &'a [usize],
}

/// One trajectory per line: `{"states": [...], "actions": [...]}`.
pub fn demos_jsonl(trajectories: &[Trajectory]) -> Result<String> {
    let mut out = String::new();
    for t in trajectories {
        out.push_str(&serde_json::to_string(&TrajectoryLine {
            states: &t.states,
            actions: &t.actions,
        })?);
        out.push('\n');
    }
    Ok(out)
}

#[derive(Debug, Serialize)]
struct PathLine {
    cells: Vec<[usize; 2]>,
    total_cost: f64,
    reachable: bool,
}

/// Planned path as one JSONL record of `[x, y]` cells.
pub fn path_jsonl(grid: &GridWorld, path: &xfer_lab_core::planner::PathResult) -> Result<String> {
    let cells = path
        .cells
        .iter()
        .map(|&s| {
            let (x, y) = grid.coords(s);
            [x, y]
        })
        .collect();
    let mut line = serde_json::to_string(&PathLine {
        cells,
        total_cost: path.total_cost,
        reachable: path.reachable,
    })?;
    line.push('\n');
    Ok(line)
}
