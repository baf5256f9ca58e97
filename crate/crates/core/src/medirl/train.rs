use crate::error::{reject, Result};
use crate::medirl::features::FeatureGrid;
use crate::medirl::model::RewardModel;
use crate::medirl::svf::{empirical_svf, expected_svf, DemoSet};
use crate::mdp::{soft_value_iteration, Mdp, RewardField, TabularPolicy};
use crate::nnet::{OptimMethod, OptimState, LOG_FLOOR};
use crate::planner;

/// Mean demonstration negative log-likelihood under a policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemoNll {
    pub nll: f64,
    /// Set when any action probability hit the log floor.
    pub clamped: bool,
}

/// `mean over demos of -sum_t log pi_t(a_t | s_t)`, with zero-probability
/// actions clamped at [`LOG_FLOOR`] and flagged.
pub fn demo_nll(policy: &TabularPolicy, demos: &DemoSet) -> Result<DemoNll> {
    if demos.is_empty() {
        return reject("demo set is empty");
    }
    let mut total = 0.0;
    let mut clamped = false;
    for traj in &demos.trajectories {
        if traj.horizon() > policy.horizon() {
            return reject(format!(
                "trajectory horizon {} exceeds policy horizon {}",
                traj.horizon(),
                policy.horizon()
            ));
        }
        for (t, (&s, &a)) in traj.states.iter().zip(&traj.actions).enumerate() {
            let mut p = policy.prob(t, s, a);
            if p < LOG_FLOOR {
                p = LOG_FLOOR;
                clamped = true;
            }
            total -= p.ln();
        }
    }
    Ok(DemoNll {
        nll: total / demos.len() as f64,
        clamped,
    })
}

/// Metrics reported by one refinement step, evaluated at the parameters
/// the step departed from.
#[derive(Debug, Clone, PartialEq)]
pub struct MedirlStepMetrics {
    pub nll: f64,
    pub nll_clamped: bool,
    pub grad_norm: f64,
}

struct EvalPoint {
    nll: f64,
    nll_clamped: bool,
    grad_flat: Vec<f64>,
    grad_norm: f64,
    evd: Option<f64>,
}

/// Shared evaluation: model -> reward -> soft policy -> expected SVF ->
/// objective gradient `mu - mu_d` pulled back through the model.
fn evaluate(
    model: &RewardModel,
    features: &FeatureGrid,
    mdp: &Mdp,
    mu_d: &[f64],
    demos: &DemoSet,
    truth: Option<&RewardField>,
) -> Result<EvalPoint> {
    let reward = model.reward(features)?;
    let (_, policy) = soft_value_iteration(mdp, &reward)?;
    let mu = expected_svf(mdp, &policy)?;
    let d_reward: Vec<f64> = mu.iter().zip(mu_d).map(|(m, d)| m - d).collect();
    let grad_flat = model.backward(features, &d_reward)?;
    let grad_norm = grad_flat.iter().map(|g| g * g).sum::<f64>().sqrt();
    let nll = demo_nll(&policy, demos)?;
    let evd = match truth {
        Some(r_true) => Some(planner::evd(mdp, r_true, &reward)?),
        None => None,
    };
    Ok(EvalPoint {
        nll: nll.nll,
        nll_clamped: nll.clamped,
        grad_flat,
        grad_norm,
        evd,
    })
}

/// One refinement step: evaluates the maximum-entropy objective gradient
/// at the current parameters, applies one optimizer update, and reports
/// the pre-update metrics.
pub fn medirl_step(
    model: &mut RewardModel,
    features: &FeatureGrid,
    mdp: &Mdp,
    mu_d: &[f64],
    demos: &DemoSet,
    optim: &mut OptimState,
) -> Result<MedirlStepMetrics> {
    if mu_d.len() != mdp.n_states() {
        return reject("mu_d length must equal state count");
    }
    let ev = evaluate(model, features, mdp, mu_d, demos, None)?;
    let mut params = model.params_flat();
    optim.step_flat(&mut params, &ev.grad_flat)?;
    model.set_params_flat(&params);
    Ok(MedirlStepMetrics {
        nll: ev.nll,
        nll_clamped: ev.nll_clamped,
        grad_norm: ev.grad_norm,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainRecord {
    pub iteration: usize,
    pub nll: f64,
    pub grad_norm: f64,
    pub evd: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainHistory {
    pub records: Vec<TrainRecord>,
    /// True when any NLL evaluation hit the log floor.
    pub nll_clamped: bool,
}

impl TrainHistory {
    /// First iteration whose EVD is at or below `threshold`, if any.
    pub fn first_iteration_below_evd(&self, threshold: f64) -> Option<usize> {
        self.records
            .iter()
            .find(|r| r.evd.is_some_and(|e| e <= threshold))
            .map(|r| r.iteration)
    }

    pub fn final_evd(&self) -> Option<f64> {
        self.records.last().and_then(|r| r.evd)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MedirlTrainConfig {
    pub iterations: usize,
    /// Stop once the parameter-gradient norm falls below this.
    pub grad_tolerance: f64,
    pub method: OptimMethod,
    pub learning_rate: f64,
}

impl Default for MedirlTrainConfig {
    fn default() -> Self {
        MedirlTrainConfig {
            iterations: 200,
            grad_tolerance: 1e-4,
            method: OptimMethod::Adam,
            learning_rate: 0.05,
        }
    }
}

/// Full refinement loop. Runs up to `iterations` steps or until the
/// gradient norm drops below tolerance; evaluates once more after the
/// last step and returns the best model by demonstration NLL together
/// with the per-iteration history (EVD filled in when `truth` is given).
pub fn train_medirl(
    model: RewardModel,
    features: &FeatureGrid,
    mdp: &Mdp,
    demos: &DemoSet,
    truth: Option<&RewardField>,
    cfg: &MedirlTrainConfig,
) -> Result<(RewardModel, TrainHistory)> {
    let mut model = model;
    let mu_d = empirical_svf(demos, mdp.n_states())?;
    let mut optim = OptimState::new(cfg.method, cfg.learning_rate)?;
    let mut history = TrainHistory::default();
    let mut best_nll = f64::INFINITY;
    let mut best_params = model.params_flat();

    for iteration in 0..=cfg.iterations {
        let ev = evaluate(&model, features, mdp, &mu_d, demos, truth)?;
        history.nll_clamped |= ev.nll_clamped;
        history.records.push(TrainRecord {
            iteration,
            nll: ev.nll,
            grad_norm: ev.grad_norm,
            evd: ev.evd,
        });
        if ev.nll < best_nll {
            best_nll = ev.nll;
            best_params = model.params_flat();
        }
        if iteration == cfg.iterations || ev.grad_norm < cfg.grad_tolerance {
            break;
        }
        let mut params = model.params_flat();
        optim.step_flat(&mut params, &ev.grad_flat)?;
        model.set_params_flat(&params);
    }
    model.set_params_flat(&best_params);
    Ok((model, history))
}

/// Warm start: least-squares regression of the model output onto the
/// negated handcrafted cost (reward = -cost), full batch, one optimizer
/// step per epoch. Returns the final mean squared error.
pub fn pretrain_from_handcrafted(
    model: &mut RewardModel,
    features: &FeatureGrid,
    handcrafted_cost: &RewardField,
    epochs: usize,
    optim: &mut OptimState,
) -> Result<f64> {
    if handcrafted_cost.len() != features.n_states() {
        return reject("handcrafted cost length must equal state count");
    }
    let n = features.n_states() as f64;
    let target: Vec<f64> = handcrafted_cost.values().iter().map(|c| -c).collect();
    let mut mse = {
        let r = model.reward(features)?;
        r.values()
            .iter()
            .zip(&target)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / n
    };
    for _ in 0..epochs {
        let r = model.reward(features)?;
        let residuals: Vec<f64> = r.values().iter().zip(&target).map(|(a, b)| a - b).collect();
        mse = residuals.iter().map(|d| d * d).sum::<f64>() / n;
        let d_reward: Vec<f64> = residuals.iter().map(|d| 2.0 * d / n).collect();
        let grad = model.backward(features, &d_reward)?;
        let mut params = model.params_flat();
        optim.step_flat(&mut params, &grad)?;
        model.set_params_flat(&params);
    }
    Ok(mse)
}
