use crate::error::{diverged, reject, Result};
use crate::mdp::{Mdp, TabularPolicy, Trajectory};
use crate::nnet::OptimState;

/// Stationary softmax policy: one logit per `(state, action)`.
///
/// MATL's learners never see the dynamics, so exact DP is off-limits;
/// a stationary table halves the parameters of a time-indexed one.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxPolicy {
    n_states: usize,
    n_actions: usize,
    logits: Vec<f64>,
}

impl SoftmaxPolicy {
    /// Zero logits: uniform over actions everywhere.
    pub fn uniform(n_states: usize, n_actions: usize) -> Self {
        SoftmaxPolicy {
            n_states,
            n_actions,
            logits: vec![0.0; n_states * n_actions],
        }
    }

    pub fn from_logits(n_states: usize, n_actions: usize, logits: Vec<f64>) -> Result<Self> {
        if logits.len() != n_states * n_actions {
            return reject("logit table size must be n_states * n_actions");
        }
        if !logits.iter().all(|v| v.is_finite()) {
            return reject("logits must be finite");
        }
        Ok(SoftmaxPolicy {
            n_states,
            n_actions,
            logits,
        })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn logits(&self) -> &[f64] {
        &self.logits
    }

    /// Action distribution at `s` (softmax with max subtraction).
    pub fn probs_row(&self, s: usize) -> Vec<f64> {
        let row = &self.logits[s * self.n_actions..(s + 1) * self.n_actions];
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = row.iter().map(|&z| (z - max).exp()).collect();
        let sum: f64 = exps.iter().sum();
        exps.iter().map(|&e| e / sum).collect()
    }

    /// Expands to the time-indexed form the MDP machinery consumes.
    pub fn to_tabular(&self, horizon: usize) -> TabularPolicy {
        let mut table = vec![0.0; self.n_states * self.n_actions];
        for s in 0..self.n_states {
            let row = self.probs_row(s);
            table[s * self.n_actions..(s + 1) * self.n_actions].copy_from_slice(&row);
        }
        TabularPolicy::stationary(self.n_states, self.n_actions, table, horizon)
            .expect("softmax rows are valid distributions")
    }
}

/// Policy gradient of the REINFORCE surrogate, returned as the gradient
/// of the NEGATED objective (ready for a minimizing optimizer).
///
/// Surrogate: `(1/n) sum_i sum_t log pi(a_t|s_t) (G_t - b_t)` plus an
/// entropy bonus `entropy_coeff * (1/n) sum_i sum_t H(pi(.|s_t))`, where
/// `G_t` is the undiscounted return-to-go of rewards that FOLLOW action
/// `t` and `b_t` the per-timestep batch mean of `G_t`. Timesteps spent in
/// terminal states are excluded: their pad actions were forced, not drawn
/// from the policy.
pub(crate) fn policy_gradient(
    policy: &SoftmaxPolicy,
    mdp: &Mdp,
    rollouts: &[Trajectory],
    step_rewards: &[Vec<f64>],
    entropy_coeff: f64,
) -> Result<Vec<f64>> {
    if rollouts.is_empty() {
        return reject("need at least one rollout");
    }
    if rollouts.len() != step_rewards.len() {
        return reject("one reward vector per rollout required");
    }
    let horizon = mdp.horizon();
    for (traj, rewards) in rollouts.iter().zip(step_rewards) {
        if traj.horizon() != horizon || rewards.len() != horizon {
            return reject("rollout and reward lengths must match the horizon");
        }
    }
    let n = rollouts.len() as f64;
    let n_actions = policy.n_actions;

    // Return-to-go per trajectory, then per-timestep batch baselines.
    let returns: Vec<Vec<f64>> = step_rewards
        .iter()
        .map(|rewards| {
            let mut g = vec![0.0; horizon];
            let mut acc = 0.0;
            for t in (0..horizon).rev() {
                acc += rewards[t];
                g[t] = acc;
            }
            g
        })
        .collect();
    let baselines: Vec<f64> = (0..horizon)
        .map(|t| returns.iter().map(|g| g[t]).sum::<f64>() / n)
        .collect();

    let mut d_logits = vec![0.0; policy.logits.len()];
    for (traj, g) in rollouts.iter().zip(&returns) {
        for t in 0..horizon {
            let s = traj.states[t];
            if mdp.is_terminal(s) {
                continue;
            }
            let a = traj.actions[t];
            let probs = policy.probs_row(s);
            let advantage = g[t] - baselines[t];
            let entropy: f64 = probs
                .iter()
                .map(|&p| if p > 0.0 { -p * p.ln() } else { 0.0 })
                .sum();
            for k in 0..n_actions {
                let indicator = (k == a) as u8 as f64;
                // d/d_logit[s,k] of log pi(a|s) = 1[k=a] - pi(k|s)
                let d_logp = indicator - probs[k];
                // d/d_logit[s,k] of H(pi) = -pi_k (log pi_k + H)
                let d_ent = -probs[k] * (probs[k].ln() + entropy);
                // Negated ascent direction.
                d_logits[s * n_actions + k] -=
                    (d_logp * advantage + entropy_coeff * d_ent) / n;
            }
        }
    }
    Ok(d_logits)
}

/// One REINFORCE update on the policy logits.
///
/// `env_rewards[i][t]` and `aux_rewards[i][t]` are the task and alignment
/// rewards collected at the state entered by action `t` of rollout `i`;
/// they are summed into the return.
pub fn reinforce_update(
    policy: &mut SoftmaxPolicy,
    optim: &mut OptimState,
    mdp: &Mdp,
    rollouts: &[Trajectory],
    env_rewards: &[Vec<f64>],
    aux_rewards: &[Vec<f64>],
    entropy_coeff: f64,
) -> Result<()> {
    if env_rewards.len() != aux_rewards.len() {
        return reject("env and aux reward sets must have equal lengths");
    }
    let combined: Vec<Vec<f64>> = env_rewards
        .iter()
        .zip(aux_rewards)
        .map(|(e, a)| {
            if e.len() != a.len() {
                return reject("env and aux reward vectors must align per step");
            }
            Ok(e.iter().zip(a).map(|(x, y)| x + y).collect())
        })
        .collect::<Result<_>>()?;
    let grad = policy_gradient(policy, mdp, rollouts, &combined, entropy_coeff)?;
    optim.step_flat(&mut policy.logits, &grad)?;
    if !policy.logits.iter().all(|v| v.is_finite()) {
        return diverged("policy logits became non-finite");
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{sample_trajectory, GridWorld};
    use crate::nnet::finite_diff_flat;
    use crate::rng::seed_rng;

    #[test]
    fn softmax_rows_are_distributions() {
        let mut p = SoftmaxPolicy::uniform(3, 4);
        p.logits[0] = 2.0;
        p.logits[5] = -3.0;
        for s in 0..3 {
            let row = p.probs_row(s);
            let total: f64 = row.iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
            assert!(row.iter().all(|&x| x > 0.0));
        }
    }

    #[test]
    fn equal_returns_leave_policy_unchanged() {
        let grid = GridWorld::open(2, 1, 2);
        let mdp = grid.to_mdp().unwrap();
        let mut policy = SoftmaxPolicy::uniform(2, 5);
        let before = policy.clone();
        let mut optim = OptimState::sgd(0.5).unwrap();
        // Two distinct rollouts with identical per-step rewards: all G_t
        // coincide with the per-timestep baseline, advantage is zero, and
        // entropy is flat at the uniform point.
        let rollouts = vec![
            Trajectory {
                states: vec![0, 1, 1],
                actions: vec![2, 2],
            },
            Trajectory {
                states: vec![0, 0, 1],
                actions: vec![3, 2],
            },
        ];
        let rewards = vec![vec![1.0, 2.0], vec![1.0, 2.0]];
        let zeros = vec![vec![0.0, 0.0], vec![0.0, 0.0]];
        reinforce_update(
            &mut policy,
            &mut optim,
            &mdp,
            &rollouts,
            &rewards,
            &zeros,
            0.01,
        )
        .unwrap();
        for (a, b) in policy.logits.iter().zip(before.logits.iter()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn bandit_action_probability_increases_monotonically() {
        // Start state 0; action E reaches the rewarded terminal, others
        // do not. pi(E|0) must grow across updates.
        let grid = GridWorld::open(2, 1, 1).with_terminals(&[(1, 0)]);
        let mdp = grid.to_mdp().unwrap();
        let mut policy = SoftmaxPolicy::uniform(2, 5);
        let mut optim = OptimState::sgd(0.3).unwrap();
        let mut rng = seed_rng(12);
        let mut last = policy.probs_row(0)[2];
        for _ in 0..30 {
            let tab = policy.to_tabular(1);
            let rollouts: Vec<Trajectory> = (0..16)
                .map(|_| sample_trajectory(&mdp, &tab, &mut rng).unwrap())
                .collect();
            let env: Vec<Vec<f64>> = rollouts
                .iter()
                .map(|tr| vec![if tr.states[1] == 1 { 1.0 } else { 0.0 }])
                .collect();
            let aux = vec![vec![0.0]; rollouts.len()];
            reinforce_update(&mut policy, &mut optim, &mdp, &rollouts, &env, &aux, 0.01)
                .unwrap();
            let now = policy.probs_row(0)[2];
            assert!(now >= last - 1e-12, "p(E) dropped: {last} -> {now}");
            last = now;
        }
        assert!(last > 0.5, "p(E) should dominate, got {last}");
    }

    #[test]
    fn surrogate_gradient_matches_finite_differences() {
        // Fixed rollouts and rewards on a 2-state fixture; compare the
        // analytic gradient against finite differences of the surrogate.
        let grid = GridWorld::open(2, 1, 3);
        let mdp = grid.to_mdp().unwrap();
        let mut policy = SoftmaxPolicy::uniform(2, 5);
        for (i, v) in policy.logits.iter_mut().enumerate() {
            *v = ((i * 13 % 7) as f64) * 0.21 - 0.5;
        }
        let rollouts = vec![
            Trajectory {
                states: vec![0, 1, 1, 0],
                actions: vec![2, 4, 3],
            },
            Trajectory {
                states: vec![0, 0, 1, 1],
                actions: vec![3, 2, 4],
            },
        ];
        let rewards = vec![vec![0.5, -0.2, 1.0], vec![0.0, 0.7, -0.4]];
        let entropy_coeff = 0.01;

        let analytic = policy_gradient(&policy, &mdp, &rollouts, &rewards, entropy_coeff).unwrap();

        // Test-side surrogate with the same baseline convention.
        let surrogate = |logits: &[f64]| {
            let mut probe = policy.clone();
            probe.logits.copy_from_slice(logits);
            let horizon = 3;
            let n = rollouts.len() as f64;
            let returns: Vec<Vec<f64>> = rewards
                .iter()
                .map(|r| {
                    let mut g = vec![0.0; horizon];
                    let mut acc = 0.0;
                    for t in (0..horizon).rev() {
                        acc += r[t];
                        g[t] = acc;
                    }
                    g
                })
                .collect();
            let baselines: Vec<f64> = (0..horizon)
                .map(|t| returns.iter().map(|g| g[t]).sum::<f64>() / n)
                .collect();
            let mut j = 0.0;
            for (traj, g) in rollouts.iter().zip(&returns) {
                for t in 0..horizon {
                    let s = traj.states[t];
                    let probs = probe.probs_row(s);
                    let entropy: f64 = probs.iter().map(|&p| -p * p.ln()).sum();
                    j += probs[traj.actions[t]].ln() * (g[t] - baselines[t]) / n;
                    j += entropy_coeff * entropy / n;
                }
            }
            -j
        };
        let numeric = finite_diff_flat(surrogate, &policy.logits, 1e-6);
        let err = crate::nnet::max_relative_error(&analytic, &numeric);
        assert!(err < 1e-4, "max relative error {err}");
    }
}
