use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use xfer_lab::artifacts::verify_manifest;
use xfer_lab::run::run_file;

#[derive(Parser)]
#[command(name = "xfer-lab", about = "Deterministic transfer-learning experiments", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one or more experiment configs.
    Run {
        /// JSON config files; each runs into its own output directory.
        #[arg(required = true)]
        configs: Vec<PathBuf>,
        /// Output directory (single config) or base directory holding one
        /// subdirectory per config stem (multiple configs).
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Max concurrent runs; extra configs launch as child processes.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Re-hash every artifact listed in a run manifest.
    Verify { manifest: PathBuf },
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run {
            configs,
            out_dir,
            jobs,
        } => cmd_run(configs, out_dir, jobs),
        Command::Verify { manifest } => cmd_verify(manifest),
    }
}

fn cmd_run(configs: Vec<PathBuf>, out_dir: Option<PathBuf>, jobs: usize) -> ExitCode {
    if jobs == 0 {
        eprintln!("--jobs must be at least 1");
        return ExitCode::from(2);
    }
    if configs.len() == 1 {
        return match run_file(&configs[0], out_dir.as_deref()) {
            Ok(artifacts) => {
                println!(
                    "wrote {} artifacts to {}",
                    artifacts.files.len(),
                    artifacts.out_dir.display()
                );
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("run failed: {e}");
                exit_code_for(&e)
            }
        };
    }

    // Sweep mode: one child process per config, at most `jobs` at a time.
    let base = out_dir.unwrap_or_else(|| PathBuf::from("."));
    let mut dirs = Vec::new();
    for cfg in &configs {
        let stem = cfg
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "run".to_string());
        let dir = base.join(stem);
        if dirs.contains(&dir) {
            eprintln!("config stems collide on output directory {}", dir.display());
            return ExitCode::from(2);
        }
        dirs.push(dir);
    }

    let exe = match std::env::current_exe() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("cannot locate executable: {e}");
            return ExitCode::FAILURE;
        }
    };
    let mut pending: Vec<(usize, std::process::Child)> = Vec::new();
    let mut failed = false;
    let reap = |pending: &mut Vec<(usize, std::process::Child)>, failed: &mut bool| {
        let (idx, mut child) = pending.remove(0);
        match child.wait() {
            Ok(status) if status.success() => {}
            Ok(status) => {
                eprintln!("run {} exited with {status}", configs[idx].display());
                *failed = true;
            }
            Err(e) => {
                eprintln!("wait failed: {e}");
                *failed = true;
            }
        }
    };
    for (idx, (cfg, dir)) in configs.iter().zip(&dirs).enumerate() {
        while pending.len() >= jobs {
            reap(&mut pending, &mut failed);
        }
        match std::process::Command::new(&exe)
            .arg("run")
            .arg(cfg)
            .arg("--out-dir")
            .arg(dir)
            .spawn()
        {
            Ok(child) => pending.push((idx, child)),
            Err(e) => {
                eprintln!("spawn failed for {}: {e}", cfg.display());
                failed = true;
            }
        }
    }
    while !pending.is_empty() {
        reap(&mut pending, &mut failed);
    }
    if failed {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}

fn cmd_verify(manifest: PathBuf) -> ExitCode {
    match verify_manifest(&manifest) {
        Ok(mismatches) if mismatches.is_empty() => {
            println!("ok: all artifact hashes verify");
            ExitCode::SUCCESS
        }
        Ok(mismatches) => {
            for m in mismatches {
                eprintln!("mismatch: {m}");
            }
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("verify failed: {e}");
            ExitCode::FAILURE
        }
    }
}

fn exit_code_for(e: &xfer_lab::CliError) -> ExitCode {
    match e {
        xfer_lab::CliError::Config(_) => ExitCode::from(2),
        _ => ExitCode::FAILURE,
    }
}
