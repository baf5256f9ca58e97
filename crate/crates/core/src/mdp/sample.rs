use serde::{Deserialize, Serialize};

use crate::error::{reject, Result};
use crate::mdp::solve::TabularPolicy;
use crate::mdp::tabular::Mdp;
use crate::rng::{sample_categorical, RunRng};

/// One rollout: `states` has length `T + 1`, `actions` length `T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub states: Vec<usize>,
    pub actions: Vec<usize>,
}

impl Trajectory {
    pub fn horizon(&self) -> usize {
        self.actions.len()
    }

    /// Checks lengths and that every step has positive transition
    /// probability under `mdp`.
    pub fn validate(&self, mdp: &Mdp) -> Result<()> {
        if self.states.len() != self.actions.len() + 1 {
            return reject("trajectory must have one more state than actions");
        }
        for (t, (&s, &a)) in self.states.iter().zip(&self.actions).enumerate() {
            if s >= mdp.n_states() || a >= mdp.n_actions() {
                return reject(format!("trajectory step {t} out of range"));
            }
            let next = self.states[t + 1];
            if mdp.transition_prob(s, a, next) <= 0.0 {
                return reject(format!(
                    "impossible transition at step {t}: ({s}, {a}) -> {next}"
                ));
            }
        }
        Ok(())
    }
}

/// Samples one trajectory of exactly `mdp.horizon()` steps.
///
/// The start state is drawn from the start distribution, actions from the
/// time-indexed policy, successors from the transition model. Absorbing
/// terminal states pad with `mdp.pad_action()` (STAY on grids) without
/// consuming randomness.
pub fn sample_trajectory(mdp: &Mdp, policy: &TabularPolicy, rng: &mut RunRng) -> Result<Trajectory> {
    if policy.horizon() != mdp.horizon() {
        return reject(format!(
            "policy horizon {} does not match mdp horizon {}",
            policy.horizon(),
            mdp.horizon()
        ));
    }
    if policy.n_states() != mdp.n_states() || policy.n_actions() != mdp.n_actions() {
        return reject("policy shape does not match mdp");
    }
    let horizon = mdp.horizon();
    let mut states = Vec::with_capacity(horizon + 1);
    let mut actions = Vec::with_capacity(horizon);
    let mut s = sample_categorical(mdp.start_dist(), rng);
    states.push(s);
    for t in 0..horizon {
        if mdp.is_terminal(s) {
            actions.push(mdp.pad_action());
            states.push(s);
            continue;
        }
        let a = sample_categorical(policy.row(t, s), rng);
        let row = mdp.next_states(s, a);
        let k = {
            let probs: Vec<f64> = row.iter().map(|&(_, p)| p).collect();
            sample_categorical(&probs, rng)
        };
        s = row[k].0;
        actions.push(a);
        states.push(s);
    }
    Ok(Trajectory { states, actions })
}
