use crate::error::{reject, Result};

/// State reward vector, one entry per state.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardField {
    values: Vec<f64>,
}

impl RewardField {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if !values.iter().all(|v| v.is_finite()) {
            return reject("reward values must be finite");
        }
        Ok(RewardField { values })
    }

    pub fn constant(n: usize, value: f64) -> Self {
        RewardField {
            values: vec![value; n],
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        RewardField::new(self.values.iter().map(|&v| f(v)).collect())
    }
}

/// A flat finite-horizon MDP: the form the solvers consume.
///
/// `transitions[s * n_actions + a]` holds the sparse next-state
/// distribution for `(s, a)`. Terminal states are absorbing; samplers
/// record `pad_action` there instead of drawing from the policy.
#[derive(Debug, Clone, PartialEq)]
pub struct Mdp {
    n_states: usize,
    n_actions: usize,
    transitions: Vec<Vec<(usize, f64)>>,
    terminal: Vec<bool>,
    horizon: usize,
    discount: f64,
    start_dist: Vec<f64>,
    pad_action: usize,
}

impl Mdp {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        n_states: usize,
        n_actions: usize,
        transitions: Vec<Vec<(usize, f64)>>,
        terminal: Vec<bool>,
        horizon: usize,
        discount: f64,
        start_dist: Vec<f64>,
        pad_action: usize,
    ) -> Result<Self> {
        if n_states == 0 || n_actions == 0 {
            return reject("mdp needs at least one state and one action");
        }
        if transitions.len() != n_states * n_actions {
            return reject("transition table size must be n_states * n_actions");
        }
        if terminal.len() != n_states || start_dist.len() != n_states {
            return reject("terminal and start_dist must have one entry per state");
        }
        if pad_action >= n_actions {
            return reject("pad_action out of range");
        }
        if !(discount > 0.0 && discount <= 1.0) {
            return reject(format!("discount must be in (0,1], got {discount}"));
        }
        let start_total: f64 = start_dist.iter().sum();
        if (start_total - 1.0).abs() > 1e-12 || start_dist.iter().any(|&p| p < 0.0) {
            return reject(format!("start_dist must sum to 1, got {start_total}"));
        }
        for (idx, row) in transitions.iter().enumerate() {
            let total: f64 = row.iter().map(|&(_, p)| p).sum();
            if (total - 1.0).abs() > 1e-12 {
                return reject(format!("transition row {idx} sums to {total}"));
            }
            for &(next, p) in row {
                if next >= n_states {
                    return reject(format!("transition row {idx} targets state {next}"));
                }
                if p < 0.0 {
                    return reject(format!("transition row {idx} has negative probability"));
                }
            }
        }
        Ok(Mdp {
            n_states,
            n_actions,
            transitions,
            terminal,
            horizon,
            discount,
            start_dist,
            pad_action,
        })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn start_dist(&self) -> &[f64] {
        &self.start_dist
    }

    pub fn pad_action(&self) -> usize {
        self.pad_action
    }

    pub fn is_terminal(&self, s: usize) -> bool {
        self.terminal[s]
    }

    pub fn next_states(&self, s: usize, a: usize) -> &[(usize, f64)] {
        &self.transitions[s * self.n_actions + a]
    }

    /// Probability of landing in `next` after `(s, a)`; zero when absent.
    pub fn transition_prob(&self, s: usize, a: usize, next: usize) -> f64 {
        self.next_states(s, a)
            .iter()
            .find(|&&(t, _)| t == next)
            .map_or(0.0, |&(_, p)| p)
    }

    /// Replaces horizon, e.g. to build short oracle fixtures.
    pub fn with_horizon(mut self, horizon: usize) -> Self {
        self.horizon = horizon;
        self
    }
}

/// Two-state toggle MDP used across the test suites: action 0 stays,
/// action 1 moves to the other state, deterministically.
#[cfg(test)]
pub(crate) fn toggle_mdp(horizon: usize) -> Mdp {
    Mdp::new(
        2,
        2,
        vec![
            vec![(0, 1.0)], // s0, stay
            vec![(1, 1.0)], // s0, go
            vec![(1, 1.0)], // s1, stay
            vec![(0, 1.0)], // s1, go
        ],
        vec![false, false],
        horizon,
        1.0,
        vec![1.0, 0.0],
        0,
    )
    .unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_transition_rows() {
        let bad = Mdp::new(
            1,
            1,
            vec![vec![(0, 0.5)]],
            vec![false],
            1,
            1.0,
            vec![1.0],
            0,
        );
        assert!(bad.is_err());
    }

    #[test]
    fn rejects_bad_start_dist() {
        let bad = Mdp::new(
            2,
            1,
            vec![vec![(0, 1.0)], vec![(1, 1.0)]],
            vec![false, false],
            1,
            1.0,
            vec![0.6, 0.6],
            0,
        );
        assert!(bad.is_err());
    }

    #[test]
    fn reward_field_rejects_non_finite() {
        assert!(RewardField::new(vec![0.0, f64::INFINITY]).is_err());
        assert!(RewardField::new(vec![0.0, 1.0]).is_ok());
    }

    #[test]
    fn toggle_fixture_is_valid() {
        let m = toggle_mdp(1);
        assert_eq!(m.n_states(), 2);
        assert_eq!(m.transition_prob(0, 1, 1), 1.0);
        assert_eq!(m.transition_prob(0, 1, 0), 0.0);
    }
}
