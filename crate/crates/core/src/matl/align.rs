use serde::{Deserialize, Serialize};

use crate::error::{diverged, reject, Result};
use crate::matl::rollout::StateBatch;
use crate::nnet::{DenseNet, Matrix, OptimState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuxMode {
    Mutual,
    Unilateral,
    None,
}

/// Auxiliary-reward parameters. `epsilon` floors the discriminator
/// probabilities inside the logarithm, bounding every auxiliary reward
/// below by `lambda * ln(epsilon)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuxConfig {
    pub lambda: f64,
    pub epsilon: f64,
    pub mode: AuxMode,
}

impl AuxConfig {
    pub fn new(lambda: f64, epsilon: f64, mode: AuxMode) -> Result<Self> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return reject(format!("lambda must be nonnegative, got {lambda}"));
        }
        if !(epsilon > 0.0 && epsilon < 0.5) {
            return reject(format!("epsilon must be in (0, 0.5), got {epsilon}"));
        }
        Ok(AuxConfig {
            lambda,
            epsilon,
            mode,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Sim,
    Real,
}

/// One cross-entropy step on the discriminator: labels are sim = 0,
/// real = 1, so its output estimates the probability a state was visited
/// on the real system. Returns the mean loss over the union.
pub fn update_discriminator(
    disc: &mut DenseNet,
    optim: &mut OptimState,
    sim_states: &StateBatch,
    real_states: &StateBatch,
) -> Result<f64> {
    if sim_states.states.is_empty() || real_states.states.is_empty() {
        return reject("both state batches must be nonempty");
    }
    let trace_sim = disc.forward(&sim_states.coords)?;
    let trace_real = disc.forward(&real_states.coords)?;
    let n_total = (sim_states.states.len() + real_states.states.len()) as f64;

    let mut loss = 0.0;
    let mut d_sim = Matrix::zeros(sim_states.states.len(), 1);
    for i in 0..sim_states.states.len() {
        let p = trace_sim.output().get(i, 0);
        loss -= (1.0 - p).ln();
        d_sim.set(i, 0, 1.0 / (1.0 - p) / n_total);
    }
    let mut d_real = Matrix::zeros(real_states.states.len(), 1);
    for i in 0..real_states.states.len() {
        let p = trace_real.output().get(i, 0);
        loss -= p.ln();
        d_real.set(i, 0, -1.0 / p / n_total);
    }
    loss /= n_total;
    if !loss.is_finite() {
        return diverged(format!("discriminator loss became {loss}"));
    }

    let (mut grads, _) = disc.backward(&trace_sim, &d_sim)?;
    let (grads_real, _) = disc.backward(&trace_real, &d_real)?;
    grads.add_assign(&grads_real);
    crate::nnet::optimizer_step(disc, &grads, optim)?;
    Ok(loss)
}

/// Classification accuracy at the 0.5 threshold over both batches.
pub fn discriminator_accuracy(
    disc: &DenseNet,
    sim_states: &StateBatch,
    real_states: &StateBatch,
) -> Result<f64> {
    let p_sim = disc.forward(&sim_states.coords)?;
    let p_real = disc.forward(&real_states.coords)?;
    let correct_sim = p_sim
        .output()
        .data()
        .iter()
        .filter(|&&p| p < 0.5)
        .count();
    let correct_real = p_real
        .output()
        .data()
        .iter()
        .filter(|&&p| p >= 0.5)
        .count();
    let total = sim_states.states.len() + real_states.states.len();
    Ok((correct_sim + correct_real) as f64 / total as f64)
}

/// Auxiliary alignment reward from a discriminator output `d` (the
/// estimated probability the state came from the real system):
///
/// - sim agent: `lambda * ln(max(d, epsilon))` — paid for visiting states
///   the discriminator thinks are real;
/// - real agent: `lambda * ln(max(1 - d, epsilon))` — paid for visiting
///   states it thinks are sim.
///
/// `mode = Unilateral` zeroes the sim side (only the real agent is pulled
/// toward the simulator's distribution); `mode = None` zeroes both.
/// `lambda = 0` returns exact 0.0 so a disabled coupling is bit-exact.
pub fn aux_reward_from_output(d: f64, domain: Domain, cfg: &AuxConfig) -> f64 {
    if cfg.lambda == 0.0 || cfg.mode == AuxMode::None {
        return 0.0;
    }
    match domain {
        Domain::Sim => {
            if cfg.mode == AuxMode::Unilateral {
                0.0
            } else {
                cfg.lambda * d.max(cfg.epsilon).ln()
            }
        }
        Domain::Real => cfg.lambda * (1.0 - d).max(cfg.epsilon).ln(),
    }
}

/// Evaluates the discriminator on one encoded state and converts it to
/// an auxiliary reward.
pub fn aux_reward(disc: &DenseNet, coords: [f64; 2], domain: Domain, cfg: &AuxConfig) -> Result<f64> {
    let x = Matrix::row_vector(&coords)?;
    let d = disc.forward(&x)?.output().get(0, 0);
    Ok(aux_reward_from_output(d, domain, cfg))
}

/// Batch version over all states of a rollout batch.
pub fn aux_rewards_for_batch(
    disc: &DenseNet,
    batch: &StateBatch,
    domain: Domain,
    cfg: &AuxConfig,
) -> Result<Vec<f64>> {
    if cfg.lambda == 0.0 || cfg.mode == AuxMode::None {
        return Ok(vec![0.0; batch.states.len()]);
    }
    if cfg.mode == AuxMode::Unilateral && domain == Domain::Sim {
        return Ok(vec![0.0; batch.states.len()]);
    }
    let trace = disc.forward(&batch.coords)?;
    Ok(trace
        .output()
        .data()
        .iter()
        .map(|&d| aux_reward_from_output(d, domain, cfg))
        .collect())
}
