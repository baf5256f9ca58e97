//! Experiment dispatch: one validated config in, one artifact directory
//! out, every byte determined by (config, seed).

use std::path::{Path, PathBuf};

use xfer_lab_core::ada::{train_iada, N_CLASSES};
use xfer_lab_core::matl::train_matl;
use xfer_lab_core::mdp::{sample_trajectory, soft_value_iteration, RewardField};
use xfer_lab_core::medirl::{
    apply_miscalibration, pretrain_from_handcrafted, train_medirl, DemoSet, FeatureGrid,
    MedirlTrainConfig, RewardModel,
};
use xfer_lab_core::nnet::{Matrix, OptimState};
use xfer_lab_core::planner::{
    plan_path, reward_to_costmap, traversability_scores, Provenance, TraversabilityScores,
};
use xfer_lab_core::rng::seed_rng;

use crate::artifacts::{
    ada_stages_csv, demos_jsonl, matl_history_csv, medirl_metrics_csv, path_jsonl, ArtifactWriter,
    RunArtifacts,
};
use crate::config::{parse_config, ExperimentConfig, Kind, MedirlConfig, ModelKind};
use crate::pgm::pgm_string;
use crate::{CliError, Result};

/// Environment variable that overrides the config seed (sweep hook).
pub const SEED_OVERRIDE_VAR: &str = "XFER_LAB_SEED_OVERRIDE";

/// Reads, parses, and runs a config file. An explicit `--out-dir` beats
/// the config's `out_dir`; one of the two must be present. The seed
/// override variable, when set, replaces the config seed before anything
/// is derived from it.
pub fn run_file(config_path: &Path, out_dir_flag: Option<&Path>) -> Result<RunArtifacts> {
    let text = std::fs::read_to_string(config_path)?;
    let mut config = parse_config(&text)?;
    if let Ok(v) = std::env::var(SEED_OVERRIDE_VAR) {
        let seed: u64 = v.parse().map_err(|_| {
            CliError::Config(format!("{SEED_OVERRIDE_VAR} must be a u64, got {v:?}"))
        })?;
        config.seed = seed;
    }
    let out_dir: PathBuf = match (out_dir_flag, &config.out_dir) {
        (Some(d), _) => d.to_path_buf(),
        (None, Some(d)) => PathBuf::from(d),
        (None, None) => {
            return Err(CliError::Config(
                "no output directory: pass --out-dir or set out_dir in the config".into(),
            ))
        }
    };
    run(&config, &out_dir)
}

/// Dispatches a validated config to its trainer and writes all artifacts.
pub fn run(config: &ExperimentConfig, out_dir: &Path) -> Result<RunArtifacts> {
    let mut writer = ArtifactWriter::new(out_dir)?;
    match config.kind {
        Kind::Medirl => run_medirl(config, &mut writer)?,
        Kind::Ada | Kind::Iada => run_ada_family(config, &mut writer)?,
        Kind::Matl => run_matl(config, &mut writer)?,
    }
    writer.finalize(config)
}

/// The handcrafted planning cost used for warm starts: goal distance
/// plus an obstacle penalty, from the clean (uncorrupted) channels.
fn handcrafted_cost(features: &FeatureGrid) -> Result<RewardField> {
    let obstacle = features.channel(0);
    let goal_dist = features.channel(1);
    Ok(RewardField::new(
        goal_dist
            .iter()
            .zip(&obstacle)
            .map(|(d, o)| 2.0 * d + o)
            .collect(),
    )?)
}

fn render_costs(costs: &[f64]) -> Vec<f64> {
    let max_finite = costs
        .iter()
        .cloned()
        .filter(|c| c.is_finite())
        .fold(0.0f64, f64::max);
    costs
        .iter()
        .map(|&c| if c.is_finite() { c } else { max_finite })
        .collect()
}

#[derive(serde::Serialize)]
struct MedirlSummary {
    final_evd: Option<f64>,
    best_nll: f64,
    nll_clamped: bool,
    traversability: TraversabilityScores,
    path_cost: Option<f64>,
    path_reachable: Option<bool>,
}

fn run_medirl(config: &ExperimentConfig, writer: &mut ArtifactWriter) -> Result<()> {
    let m: &MedirlConfig = config.medirl.as_ref().expect("validated at parse");
    let grid = m.grid.build()?;
    let mdp = grid.to_mdp()?;
    let mut rng = seed_rng(config.seed);

    let features_clean = FeatureGrid::for_grid(&grid, &mut rng);
    let truth = linear_truth(&features_clean, &m.truth_weights)?;
    let (_, pi_true) = soft_value_iteration(&mdp, &truth)?;
    let demos = DemoSet::new(
        (0..m.demo_count)
            .map(|_| sample_trajectory(&mdp, &pi_true, &mut rng))
            .collect::<xfer_lab_core::Result<_>>()?,
        "soft-optimal",
    );

    let features_train = match m.miscalibration {
        Some([dx, dy]) => apply_miscalibration(&features_clean, dx, dy)?,
        None => features_clean.clone(),
    };

    let mut model = match m.model {
        ModelKind::Linear => RewardModel::linear_zeros(features_train.dim()),
        ModelKind::Deep => RewardModel::deep(features_train.dim(), &m.hidden, &mut rng),
    };
    if m.pretrain_epochs > 0 {
        let cost = handcrafted_cost(&features_clean)?;
        let mut optim = OptimState::new(m.optimizer, m.learning_rate)?;
        pretrain_from_handcrafted(&mut model, &features_train, &cost, m.pretrain_epochs, &mut optim)?;
    }

    let cfg = MedirlTrainConfig {
        iterations: m.iterations,
        grad_tolerance: m.grad_tolerance,
        method: m.optimizer,
        learning_rate: m.learning_rate,
    };
    let (model, history) = train_medirl(model, &features_train, &mdp, &demos, Some(&truth), &cfg)?;

    let learned = model.reward(&features_train)?;
    let costmap = reward_to_costmap(&grid, &learned, m.cost_floor, Provenance::Learned)?;
    let scores = traversability_scores(&costmap, &demos, m.traversability_quantile)?;

    writer.write("metrics.csv", &medirl_metrics_csv(&history))?;
    writer.write("demos.jsonl", &demos_jsonl(&demos.trajectories)?)?;
    writer.write(
        "reward_true.pgm",
        &pgm_string(truth.values(), grid.width(), grid.height())?,
    )?;
    writer.write(
        "reward_learned.pgm",
        &pgm_string(learned.values(), grid.width(), grid.height())?,
    )?;
    writer.write(
        "costmap_learned.pgm",
        &pgm_string(&render_costs(&costmap.costs), grid.width(), grid.height())?,
    )?;
    writer.write(
        "model.json",
        &serde_json::to_string_pretty(&model.to_snapshot())?,
    )?;

    // Plan start -> goal on the learned costmap when both exist.
    let start = m.grid.start_cells.first().copied();
    let goal = m.grid.terminals.first().copied();
    let path = match (start, goal) {
        (Some([sx, sy]), Some([gx, gy])) => {
            let p = plan_path(&costmap, grid.index(sx, sy), grid.index(gx, gy))?;
            writer.write("path_learned.jsonl", &path_jsonl(&grid, &p)?)?;
            Some(p)
        }
        _ => None,
    };

    let summary = MedirlSummary {
        final_evd: history.final_evd(),
        best_nll: history
            .records
            .iter()
            .map(|r| r.nll)
            .fold(f64::INFINITY, f64::min),
        nll_clamped: history.nll_clamped,
        traversability: scores,
        path_cost: path.as_ref().map(|p| p.total_cost),
        path_reachable: path.as_ref().map(|p| p.reachable),
    };
    let mut text = serde_json::to_string_pretty(&summary)?;
    text.push('\n');
    writer.write("summary.json", &text)?;
    Ok(())
}

fn linear_truth(features: &FeatureGrid, weights: &[f64]) -> Result<RewardField> {
    if weights.len() != features.dim() {
        return Err(CliError::Config(format!(
            "truth_weights has {} entries, features have {} channels",
            weights.len(),
            features.dim()
        )));
    }
    let values = (0..features.n_states())
        .map(|s| {
            features
                .row(s)
                .iter()
                .zip(weights)
                .map(|(x, w)| x * w)
                .sum()
        })
        .collect();
    Ok(RewardField::new(values)?)
}

fn run_ada_family(config: &ExperimentConfig, writer: &mut ArtifactWriter) -> Result<()> {
    let (source, stream, train) = match config.kind {
        Kind::Ada => {
            let a = config.ada.as_ref().expect("validated at parse");
            (a.source.to_spec(), vec![a.target.to_spec()], &a.train)
        }
        Kind::Iada => {
            let i = config.iada.as_ref().expect("validated at parse");
            (
                i.source.to_spec(),
                i.stream.iter().map(|d| d.to_spec()).collect(),
                &i.train,
            )
        }
        _ => unreachable!(),
    };
    let cfg = train.to_core();
    let (model, stages) = train_iada(&source, &stream, &cfg, config.seed)?;

    writer.write("stages.csv", &ada_stages_csv(&stages, config.seed))?;
    writer.write(
        "model.json",
        &serde_json::to_string_pretty(&model.to_snapshot())?,
    )?;
    if train.emit_boundary {
        writer.write("boundary.pgm", &decision_boundary_pgm(&model)?)?;
    }
    Ok(())
}

/// Rasterizes P(class 1) over [-2, 2]^2 on a 64x64 grid.
fn decision_boundary_pgm(model: &xfer_lab_core::ada::AdaModel) -> Result<String> {
    let n = 64;
    let mut probs = Vec::with_capacity(n * n);
    let mut points = Vec::with_capacity(n * n * 2);
    for j in 0..n {
        for i in 0..n {
            let x = -2.0 + 4.0 * (i as f64 + 0.5) / n as f64;
            let y = 2.0 - 4.0 * (j as f64 + 0.5) / n as f64;
            points.push(x);
            points.push(y);
        }
    }
    let batch = Matrix::from_vec(n * n, 2, points).map_err(xfer_lab_core::Error::from)?;
    let embedded = model.feature_net.forward(&batch).map_err(xfer_lab_core::Error::from)?;
    let logits = model
        .label_head
        .forward(embedded.output())
        .map_err(xfer_lab_core::Error::from)?;
    for i in 0..n * n {
        let row = logits.output().row(i);
        debug_assert_eq!(row.len(), N_CLASSES);
        let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let e0 = (row[0] - m).exp();
        let e1 = (row[1] - m).exp();
        probs.push(e1 / (e0 + e1));
    }
    pgm_string(&probs, n, n)
}

fn run_matl(config: &ExperimentConfig, writer: &mut ArtifactWriter) -> Result<()> {
    let m = config.matl.as_ref().expect("validated at parse");
    let pair = m.env.build()?;
    let cfg = m.to_core();
    for &mode in &m.modes {
        let history = train_matl(&pair, mode, &cfg, config.seed)?;
        writer.write(
            &format!("history_{}.csv", mode.as_str()),
            &matl_history_csv(&history),
        )?;
    }
    Ok(())
}
