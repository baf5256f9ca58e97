//! Experiment configuration: strict JSON (unknown keys are hard errors,
//! the seed is mandatory), with every default resolved at parse time so
//! the effective config can be persisted verbatim into the manifest.

use serde::{Deserialize, Serialize};

use xfer_lab_core::ada::{BaseShape, DomainSpec};
use xfer_lab_core::matl::MatlMode;
use xfer_lab_core::mdp::{Action, GridWorld};
use xfer_lab_core::nnet::OptimMethod;

use crate::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Medirl,
    Ada,
    Iada,
    Matl,
}

impl Kind {
    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Medirl => "medirl",
            Kind::Ada => "ada",
            Kind::Iada => "iada",
            Kind::Matl => "matl",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub medirl: Option<MedirlConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ada: Option<AdaConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iada: Option<IadaConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matl: Option<MatlConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub width: usize,
    pub height: usize,
    #[serde(default)]
    pub obstacles: Vec<[usize; 2]>,
    #[serde(default)]
    pub terminals: Vec<[usize; 2]>,
    #[serde(default)]
    pub p_slip: f64,
    /// Permutation of ["N","S","E","W","STAY"]; identity when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action_remap: Option<[Action; 5]>,
    /// Defaults to 2 * (width + height).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(default = "default_discount")]
    pub discount: f64,
    #[serde(default = "default_start_cells")]
    pub start_cells: Vec<[usize; 2]>,
}

fn default_discount() -> f64 {
    1.0
}

fn default_start_cells() -> Vec<[usize; 2]> {
    vec![[0, 0]]
}

impl GridConfig {
    fn resolve(&mut self) {
        if self.horizon.is_none() {
            self.horizon = Some(2 * (self.width + self.height));
        }
    }

    pub fn build(&self) -> Result<GridWorld> {
        let obstacles: Vec<(usize, usize)> =
            self.obstacles.iter().map(|&[x, y]| (x, y)).collect();
        let terminals: Vec<(usize, usize)> =
            self.terminals.iter().map(|&[x, y]| (x, y)).collect();
        let starts: Vec<(usize, usize)> =
            self.start_cells.iter().map(|&[x, y]| (x, y)).collect();
        for &[x, y] in self
            .obstacles
            .iter()
            .chain(&self.terminals)
            .chain(&self.start_cells)
        {
            if x >= self.width || y >= self.height {
                return Err(CliError::Config(format!(
                    "cell ({x},{y}) outside {}x{} grid",
                    self.width, self.height
                )));
            }
        }
        let mut grid = GridWorld::open(
            self.width,
            self.height,
            self.horizon.expect("resolved at parse time"),
        )
        .with_obstacles(&obstacles)
        .with_terminals(&terminals)
        .with_p_slip(self.p_slip)
        .with_discount(self.discount)
        .with_start_cells(&starts);
        if let Some(remap) = self.action_remap {
            grid = grid.with_action_remap(remap);
        }
        grid.validate()?;
        Ok(grid)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MedirlConfig {
    pub grid: GridConfig,
    pub demo_count: usize,
    pub iterations: usize,
    #[serde(default = "default_medirl_lr")]
    pub learning_rate: f64,
    #[serde(default = "default_adam")]
    pub optimizer: OptimMethod,
    #[serde(default = "default_model_kind")]
    pub model: ModelKind,
    #[serde(default = "default_hidden")]
    pub hidden: Vec<usize>,
    /// Hidden linear ground-truth reward over the four feature channels.
    #[serde(default = "default_truth_weights")]
    pub truth_weights: Vec<f64>,
    #[serde(default)]
    pub pretrain_epochs: usize,
    /// Feature shift [dx, dy] applied before training (sensing offset).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub miscalibration: Option<[i64; 2]>,
    #[serde(default = "default_grad_tolerance")]
    pub grad_tolerance: f64,
    #[serde(default = "default_cost_floor")]
    pub cost_floor: f64,
    #[serde(default = "default_quantile")]
    pub traversability_quantile: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Linear,
    Deep,
}

fn default_medirl_lr() -> f64 {
    0.05
}

fn default_adam() -> OptimMethod {
    OptimMethod::Adam
}

fn default_model_kind() -> ModelKind {
    ModelKind::Deep
}

fn default_hidden() -> Vec<usize> {
    vec![32, 32]
}

fn default_truth_weights() -> Vec<f64> {
    vec![-1.0, -2.0, 0.0, 0.8]
}

fn default_grad_tolerance() -> f64 {
    1e-4
}

fn default_cost_floor() -> f64 {
    0.1
}

fn default_quantile() -> f64 {
    0.3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub shape: BaseShape,
    pub rotation_deg: f64,
    #[serde(default = "default_noise_std")]
    pub noise_std: f64,
}

fn default_noise_std() -> f64 {
    0.1
}

impl DomainConfig {
    pub fn to_spec(&self) -> DomainSpec {
        DomainSpec {
            base_shape: self.shape,
            rotation_deg: self.rotation_deg,
            noise_std: self.noise_std,
            n_per_class: 0, // callers size batches explicitly
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdaTrainBlock {
    #[serde(default = "default_ada_steps")]
    pub steps_per_stage: usize,
    #[serde(default = "default_batch_per_class")]
    pub batch_per_class: usize,
    #[serde(default = "default_lambda_max")]
    pub lambda_max: f64,
    #[serde(default = "default_ada_lr")]
    pub learning_rate: f64,
    #[serde(default = "default_adam")]
    pub optimizer: OptimMethod,
    #[serde(default = "default_eval_per_class")]
    pub eval_per_class: usize,
    #[serde(default = "default_hidden")]
    pub hidden: Vec<usize>,
    /// Emit a decision-boundary raster per stage.
    #[serde(default)]
    pub emit_boundary: bool,
}

fn default_ada_steps() -> usize {
    1500
}

fn default_batch_per_class() -> usize {
    32
}

fn default_lambda_max() -> f64 {
    1.0
}

fn default_ada_lr() -> f64 {
    5e-3
}

fn default_eval_per_class() -> usize {
    500
}

impl Default for AdaTrainBlock {
    fn default() -> Self {
        AdaTrainBlock {
            steps_per_stage: default_ada_steps(),
            batch_per_class: default_batch_per_class(),
            lambda_max: default_lambda_max(),
            learning_rate: default_ada_lr(),
            optimizer: default_adam(),
            eval_per_class: default_eval_per_class(),
            hidden: default_hidden(),
            emit_boundary: false,
        }
    }
}

impl AdaTrainBlock {
    pub fn to_core(&self) -> xfer_lab_core::ada::AdaTrainConfig {
        xfer_lab_core::ada::AdaTrainConfig {
            steps_per_stage: self.steps_per_stage,
            batch_per_class: self.batch_per_class,
            lambda_max: self.lambda_max,
            method: self.optimizer,
            learning_rate: self.learning_rate,
            eval_per_class: self.eval_per_class,
            feature_hidden: self.hidden.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdaConfig {
    pub source: DomainConfig,
    pub target: DomainConfig,
    #[serde(default)]
    pub train: AdaTrainBlock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IadaConfig {
    pub source: DomainConfig,
    pub stream: Vec<DomainConfig>,
    #[serde(default)]
    pub train: AdaTrainBlock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatlEnvConfig {
    pub width: usize,
    pub height: usize,
    #[serde(default)]
    pub obstacles: Vec<[usize; 2]>,
    pub goal: [usize; 2],
    pub start: [usize; 2],
    /// Defaults to 2 * (width + height).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(default = "default_goal_reward")]
    pub goal_reward: f64,
    #[serde(default)]
    pub sim_p_slip: f64,
    #[serde(default)]
    pub real_p_slip: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sim_action_remap: Option<[Action; 5]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub real_action_remap: Option<[Action; 5]>,
}

fn default_goal_reward() -> f64 {
    1.0
}

impl MatlEnvConfig {
    fn resolve(&mut self) {
        if self.horizon.is_none() {
            self.horizon = Some(2 * (self.width + self.height));
        }
    }

    pub fn build(&self) -> Result<xfer_lab_core::matl::EnvPair> {
        let base = GridConfig {
            width: self.width,
            height: self.height,
            obstacles: self.obstacles.clone(),
            terminals: vec![self.goal],
            p_slip: 0.0,
            action_remap: None,
            horizon: self.horizon,
            discount: 1.0,
            start_cells: vec![self.start],
        };
        let mut sim = base.clone();
        sim.p_slip = self.sim_p_slip;
        sim.action_remap = self.sim_action_remap;
        let mut real = base;
        real.p_slip = self.real_p_slip;
        real.action_remap = self.real_action_remap;

        let sim_grid = sim.build()?;
        let real_grid = real.build()?;
        let mut reward = vec![0.0; self.width * self.height];
        reward[self.goal[1] * self.width + self.goal[0]] = self.goal_reward;
        Ok(xfer_lab_core::matl::EnvPair::new(
            sim_grid,
            real_grid,
            xfer_lab_core::mdp::RewardField::new(reward)?,
        )?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatlConfig {
    pub env: MatlEnvConfig,
    #[serde(default = "default_modes")]
    pub modes: Vec<MatlMode>,
    pub iters: usize,
    #[serde(default = "default_rollouts")]
    pub rollouts_per_iter: usize,
    #[serde(default = "default_disc_steps")]
    pub disc_steps: usize,
    #[serde(default = "default_policy_lr")]
    pub policy_lr: f64,
    #[serde(default = "default_disc_lr")]
    pub disc_lr: f64,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_entropy")]
    pub entropy_coeff: f64,
    #[serde(default = "default_pretrain_iters")]
    pub pretrain_iters: usize,
    #[serde(default = "default_hidden")]
    pub disc_hidden: Vec<usize>,
}

fn default_modes() -> Vec<MatlMode> {
    MatlMode::ALL.to_vec()
}

fn default_rollouts() -> usize {
    16
}

fn default_disc_steps() -> usize {
    3
}

fn default_policy_lr() -> f64 {
    0.2
}

fn default_disc_lr() -> f64 {
    0.01
}

fn default_lambda() -> f64 {
    0.1
}

fn default_epsilon() -> f64 {
    1e-6
}

fn default_entropy() -> f64 {
    0.01
}

fn default_pretrain_iters() -> usize {
    120
}

impl MatlConfig {
    pub fn to_core(&self) -> xfer_lab_core::matl::MatlConfig {
        xfer_lab_core::matl::MatlConfig {
            iters: self.iters,
            rollouts_per_iter: self.rollouts_per_iter,
            disc_steps: self.disc_steps,
            policy_lr: self.policy_lr,
            disc_lr: self.disc_lr,
            lambda: self.lambda,
            epsilon: self.epsilon,
            entropy_coeff: self.entropy_coeff,
            pretrain_iters: self.pretrain_iters,
            disc_hidden: self.disc_hidden.clone(),
        }
    }
}

/// Parses, validates, and default-resolves a config from JSON text.
///
/// Unknown keys and a missing seed are hard errors; exactly one kind
/// block must be present and it must match `kind`.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut cfg: ExperimentConfig =
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
    let blocks = [
        cfg.medirl.is_some(),
        cfg.ada.is_some(),
        cfg.iada.is_some(),
        cfg.matl.is_some(),
    ];
    let present = blocks.iter().filter(|&&b| b).count();
    if present != 1 {
        return Err(CliError::Config(format!(
            "exactly one experiment block must be present, found {present}"
        )));
    }
    let matches = match cfg.kind {
        Kind::Medirl => cfg.medirl.is_some(),
        Kind::Ada => cfg.ada.is_some(),
        Kind::Iada => cfg.iada.is_some(),
        Kind::Matl => cfg.matl.is_some(),
    };
    if !matches {
        return Err(CliError::Config(format!(
            "kind \"{}\" does not match the experiment block present",
            cfg.kind.as_str()
        )));
    }
    if let Some(m) = &mut cfg.medirl {
        m.grid.resolve();
        if m.truth_weights.len() != 4 {
            return Err(CliError::Config(
                "truth_weights must have one entry per feature channel (4)".into(),
            ));
        }
    }
    if let Some(m) = &mut cfg.matl {
        m.env.resolve();
    }
    if let Some(i) = &cfg.iada {
        if i.stream.is_empty() {
            return Err(CliError::Config("iada stream must be nonempty".into()));
        }
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL_MEDIRL: &str = r#"{
        "kind": "medirl",
        "seed": 7,
        "medirl": {
            "grid": { "width": 4, "height": 4, "terminals": [[3, 3]] },
            "demo_count": 10,
            "iterations": 5
        }
    }"#;

    #[test]
    fn minimal_config_fills_documented_defaults() {
        let cfg = parse_config(MINIMAL_MEDIRL).unwrap();
        let m = cfg.medirl.unwrap();
        assert_eq!(m.grid.horizon, Some(16)); // 2 * (4 + 4)
        assert_eq!(m.grid.discount, 1.0);
        assert_eq!(m.grid.start_cells, vec![[0, 0]]);
        assert_eq!(m.learning_rate, 0.05);
        assert_eq!(m.optimizer, OptimMethod::Adam);
        assert_eq!(m.model, ModelKind::Deep);
        assert_eq!(m.hidden, vec![32, 32]);
        assert_eq!(m.cost_floor, 0.1);
    }

    #[test]
    fn unknown_key_is_named_in_the_error() {
        let text = MINIMAL_MEDIRL.replace("\"iterations\"", "\"gama\": 1, \"iterations\"");
        let err = parse_config(&text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("gama"), "error should name the key: {msg}");
    }

    #[test]
    fn missing_seed_is_a_hard_error() {
        let text = MINIMAL_MEDIRL.replace("\"seed\": 7,", "");
        let err = parse_config(&text).unwrap_err();
        assert!(err.to_string().contains("seed"));
    }

    #[test]
    fn kind_must_match_block() {
        let text = MINIMAL_MEDIRL.replace("\"kind\": \"medirl\"", "\"kind\": \"ada\"");
        assert!(parse_config(&text).is_err());
    }

    #[test]
    fn roundtrip_is_identity() {
        let cfg = parse_config(MINIMAL_MEDIRL).unwrap();
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        let again = parse_config(&text).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn grid_rejects_out_of_bounds_cells() {
        let text = MINIMAL_MEDIRL.replace("[[3, 3]]", "[[9, 3]]");
        let cfg = parse_config(&text).unwrap();
        assert!(cfg.medirl.unwrap().grid.build().is_err());
    }
}
