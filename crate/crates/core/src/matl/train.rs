use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::matl::align::{
    aux_rewards_for_batch, discriminator_accuracy, update_discriminator, AuxConfig, AuxMode,
    Domain,
};
use crate::matl::env::EnvPair;
use crate::matl::policy::{reinforce_update, SoftmaxPolicy};
use crate::matl::rollout::{collect_rollouts, StateBatch};
use crate::mdp::{GridWorld, Mdp, Trajectory};
use crate::nnet::{Activation, DenseNet, OptimState};
use crate::rng::{child_seed, seed_rng, RunRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatlMode {
    Mutual,
    Unilateral,
    None,
    Finetune,
    MutualFinetune,
}

impl MatlMode {
    pub const ALL: [MatlMode; 5] = [
        MatlMode::Mutual,
        MatlMode::Unilateral,
        MatlMode::None,
        MatlMode::Finetune,
        MatlMode::MutualFinetune,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MatlMode::Mutual => "mutual",
            MatlMode::Unilateral => "unilateral",
            MatlMode::None => "none",
            MatlMode::Finetune => "finetune",
            MatlMode::MutualFinetune => "mutual_finetune",
        }
    }

    fn aux_mode(self) -> AuxMode {
        match self {
            MatlMode::Mutual | MatlMode::MutualFinetune => AuxMode::Mutual,
            MatlMode::Unilateral => AuxMode::Unilateral,
            MatlMode::None | MatlMode::Finetune => AuxMode::None,
        }
    }

    fn pretrains(self) -> bool {
        matches!(self, MatlMode::Finetune | MatlMode::MutualFinetune)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatlConfig {
    pub iters: usize,
    pub rollouts_per_iter: usize,
    /// Discriminator cross-entropy steps per iteration.
    pub disc_steps: usize,
    pub policy_lr: f64,
    pub disc_lr: f64,
    pub lambda: f64,
    pub epsilon: f64,
    pub entropy_coeff: f64,
    /// Sim-only iterations before the main loop in finetune modes.
    pub pretrain_iters: usize,
    pub disc_hidden: Vec<usize>,
}

impl Default for MatlConfig {
    fn default() -> Self {
        MatlConfig {
            iters: 150,
            rollouts_per_iter: 16,
            disc_steps: 3,
            policy_lr: 0.2,
            disc_lr: 0.01,
            lambda: 0.1,
            epsilon: 1e-6,
            entropy_coeff: 0.01,
            pretrain_iters: 120,
            disc_hidden: vec![32, 32],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatlRecord {
    pub iter: usize,
    pub sim_return: f64,
    pub real_return: f64,
    /// Fraction of real-env rollouts that reached a goal cell.
    pub success_rate: f64,
    pub disc_acc: f64,
    pub aux_mean_sim: f64,
    pub aux_mean_real: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatlHistory {
    pub mode: MatlMode,
    pub seed: u64,
    pub records: Vec<MatlRecord>,
}

impl MatlHistory {
    /// Mean real-env success over the final quarter of iterations; the
    /// per-run score used by the transfer experiments.
    pub fn final_success(&self) -> f64 {
        let n = self.records.len();
        if n == 0 {
            return 0.0;
        }
        let from = n - (n / 4).max(1);
        let tail = &self.records[from..];
        tail.iter().map(|r| r.success_rate).sum::<f64>() / tail.len() as f64
    }
}

fn episode_return(traj: &Trajectory, reward: &[f64]) -> f64 {
    traj.states.iter().map(|&s| reward[s]).sum()
}

fn reached_goal(traj: &Trajectory, grid: &GridWorld) -> bool {
    traj.states.iter().any(|&s| grid.is_terminal(s))
}

/// Per-step env rewards for each rollout: the task reward of the state
/// entered by each action.
fn step_env_rewards(trajs: &[Trajectory], reward: &[f64]) -> Vec<Vec<f64>> {
    trajs
        .iter()
        .map(|t| t.states[1..].iter().map(|&s| reward[s]).collect())
        .collect()
}

/// Reshapes a flat per-visited-state vector back into per-rollout rows.
fn per_rollout(values: &[f64], n_rollouts: usize, horizon: usize) -> Vec<Vec<f64>> {
    (0..n_rollouts)
        .map(|i| values[i * horizon..(i + 1) * horizon].to_vec())
        .collect()
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

struct SimOnlyTrainer<'a> {
    grid: &'a GridWorld,
    mdp: &'a Mdp,
    reward: &'a [f64],
}

impl SimOnlyTrainer<'_> {
    fn step(
        &self,
        policy: &mut SoftmaxPolicy,
        optim: &mut OptimState,
        n: usize,
        entropy_coeff: f64,
        rng: &mut RunRng,
    ) -> Result<()> {
        let (trajs, _) = collect_rollouts(self.grid, self.mdp, policy, n, rng)?;
        let env = step_env_rewards(&trajs, self.reward);
        let aux = vec![vec![0.0; self.mdp.horizon()]; trajs.len()];
        reinforce_update(policy, optim, self.mdp, &trajs, &env, &aux, entropy_coeff)
    }
}

/// Runs one MATL experiment.
///
/// Per iteration: collect rollouts on both systems, take discriminator
/// steps on the visited-state batches, convert discriminator confusion
/// into auxiliary rewards per `mode`, and REINFORCE-update both policies.
/// Finetune modes first train the sim policy alone for
/// `cfg.pretrain_iters` iterations and initialize the real policy from
/// it. Every stochastic component draws from its own seed-derived stream.
pub fn train_matl(pair: &EnvPair, mode: MatlMode, cfg: &MatlConfig, seed: u64) -> Result<MatlHistory> {
    let aux_cfg = AuxConfig::new(cfg.lambda, cfg.epsilon, mode.aux_mode())?;
    let sim_mdp = pair.sim.to_mdp()?;
    let real_mdp = pair.real.to_mdp()?;
    let reward = pair.task_reward.values();
    let n_states = sim_mdp.n_states();
    let n_actions = sim_mdp.n_actions();
    let horizon = sim_mdp.horizon();

    let mut sim_rng = seed_rng(child_seed(seed, 1));
    let mut real_rng = seed_rng(child_seed(seed, 2));
    let mut disc_rng = seed_rng(child_seed(seed, 3));

    let mut pi_sim = SoftmaxPolicy::uniform(n_states, n_actions);
    let mut pi_real = SoftmaxPolicy::uniform(n_states, n_actions);
    let mut sim_optim = OptimState::sgd(cfg.policy_lr)?;
    let mut real_optim = OptimState::sgd(cfg.policy_lr)?;

    let mut disc_dims = vec![2];
    disc_dims.extend_from_slice(&cfg.disc_hidden);
    disc_dims.push(1);
    let mut disc = DenseNet::new(&disc_dims, Activation::Tanh, Activation::Sigmoid, &mut disc_rng);
    let mut disc_optim = OptimState::adam(cfg.disc_lr)?;

    if mode.pretrains() {
        let trainer = SimOnlyTrainer {
            grid: &pair.sim,
            mdp: &sim_mdp,
            reward,
        };
        for _ in 0..cfg.pretrain_iters {
            trainer.step(
                &mut pi_sim,
                &mut sim_optim,
                cfg.rollouts_per_iter,
                cfg.entropy_coeff,
                &mut sim_rng,
            )?;
        }
        pi_real = pi_sim.clone();
    }

    let mut records = Vec::with_capacity(cfg.iters);
    for iter in 0..cfg.iters {
        let (sim_trajs, sim_batch): (Vec<Trajectory>, StateBatch) = collect_rollouts(
            &pair.sim,
            &sim_mdp,
            &pi_sim,
            cfg.rollouts_per_iter,
            &mut sim_rng,
        )?;
        let (real_trajs, real_batch) = collect_rollouts(
            &pair.real,
            &real_mdp,
            &pi_real,
            cfg.rollouts_per_iter,
            &mut real_rng,
        )?;

        for _ in 0..cfg.disc_steps {
            update_discriminator(&mut disc, &mut disc_optim, &sim_batch, &real_batch)?;
        }
        let disc_acc = discriminator_accuracy(&disc, &sim_batch, &real_batch)?;

        let aux_sim_flat = aux_rewards_for_batch(&disc, &sim_batch, Domain::Sim, &aux_cfg)?;
        let aux_real_flat = aux_rewards_for_batch(&disc, &real_batch, Domain::Real, &aux_cfg)?;

        let env_sim = step_env_rewards(&sim_trajs, reward);
        let env_real = step_env_rewards(&real_trajs, reward);
        let aux_sim = per_rollout(&aux_sim_flat, sim_trajs.len(), horizon);
        let aux_real = per_rollout(&aux_real_flat, real_trajs.len(), horizon);

        reinforce_update(
            &mut pi_sim,
            &mut sim_optim,
            &sim_mdp,
            &sim_trajs,
            &env_sim,
            &aux_sim,
            cfg.entropy_coeff,
        )?;
        reinforce_update(
            &mut pi_real,
            &mut real_optim,
            &real_mdp,
            &real_trajs,
            &env_real,
            &aux_real,
            cfg.entropy_coeff,
        )?;

        let sim_returns: Vec<f64> = sim_trajs.iter().map(|t| episode_return(t, reward)).collect();
        let real_returns: Vec<f64> =
            real_trajs.iter().map(|t| episode_return(t, reward)).collect();
        let successes = real_trajs
            .iter()
            .filter(|t| reached_goal(t, &pair.real))
            .count();
        records.push(MatlRecord {
            iter,
            sim_return: mean(&sim_returns),
            real_return: mean(&real_returns),
            success_rate: successes as f64 / real_trajs.len() as f64,
            disc_acc,
            aux_mean_sim: mean(&aux_sim_flat),
            aux_mean_real: mean(&aux_real_flat),
        });
    }
    Ok(MatlHistory {
        mode,
        seed,
        records,
    })
}
