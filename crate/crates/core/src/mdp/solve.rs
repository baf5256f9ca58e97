use crate::error::{reject, Result};
use crate::mdp::tabular::{Mdp, RewardField};

/// Time-indexed stochastic policy: `probs[t][s * n_actions + a]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularPolicy {
    n_states: usize,
    n_actions: usize,
    probs: Vec<Vec<f64>>,
}

impl TabularPolicy {
    pub fn new(n_states: usize, n_actions: usize, probs: Vec<Vec<f64>>) -> Result<Self> {
        for (t, table) in probs.iter().enumerate() {
            if table.len() != n_states * n_actions {
                return reject(format!("policy table at t={t} has wrong size"));
            }
            for s in 0..n_states {
                let row = &table[s * n_actions..(s + 1) * n_actions];
                let total: f64 = row.iter().sum();
                if (total - 1.0).abs() > 1e-9 || row.iter().any(|&p| p < 0.0) {
                    return reject(format!("policy row (t={t}, s={s}) sums to {total}"));
                }
            }
        }
        Ok(TabularPolicy {
            n_states,
            n_actions,
            probs,
        })
    }

    /// Repeats one stationary table for every step of the horizon.
    pub fn stationary(n_states: usize, n_actions: usize, table: Vec<f64>, horizon: usize) -> Result<Self> {
        Self::new(n_states, n_actions, vec![table; horizon])
    }

    /// Uniform policy over all actions.
    pub fn uniform(n_states: usize, n_actions: usize, horizon: usize) -> Self {
        let table = vec![1.0 / n_actions as f64; n_states * n_actions];
        TabularPolicy {
            n_states,
            n_actions,
            probs: vec![table; horizon],
        }
    }

    pub fn horizon(&self) -> usize {
        self.probs.len()
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn prob(&self, t: usize, s: usize, a: usize) -> f64 {
        self.probs[t][s * self.n_actions + a]
    }

    pub fn row(&self, t: usize, s: usize) -> &[f64] {
        &self.probs[t][s * self.n_actions..(s + 1) * self.n_actions]
    }
}

/// Soft (log-sum-exp) state and state-action values.
///
/// `v[t][s]` for `t in 0..=T`, `q[t][s * n_actions + a]` for `t in 0..T`.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftValues {
    pub v: Vec<Vec<f64>>,
    pub q: Vec<Vec<f64>>,
}

/// Hard (max) values plus the greedy deterministic policy, ties broken by
/// lowest action index.
#[derive(Debug, Clone, PartialEq)]
pub struct HardSolution {
    pub v: Vec<Vec<f64>>,
    pub greedy: Vec<Vec<usize>>,
}

fn check_reward(mdp: &Mdp, reward: &RewardField) -> Result<()> {
    if reward.len() != mdp.n_states() {
        return reject(format!(
            "reward has {} entries for {} states",
            reward.len(),
            mdp.n_states()
        ));
    }
    Ok(())
}

/// `log(sum(exp(xs)))` with max subtraction.
pub(crate) fn logsumexp(xs: &[f64]) -> f64 {
    let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + xs.iter().map(|&x| (x - max).exp()).sum::<f64>().ln()
}

/// Maximum-entropy backward recursion.
///
/// `V_T(s) = r(s)`;
/// `Q_t(s,a) = r(s) + gamma * sum_s' P(s'|s,a) V_{t+1}(s')`;
/// `V_t(s) = logsumexp_a Q_t(s,a)`;
/// `pi_t(a|s) = exp(Q_t(s,a) - V_t(s))`.
pub fn soft_value_iteration(mdp: &Mdp, reward: &RewardField) -> Result<(SoftValues, TabularPolicy)> {
    check_reward(mdp, reward)?;
    let (n, n_actions, horizon) = (mdp.n_states(), mdp.n_actions(), mdp.horizon());
    let r = reward.values();
    let gamma = mdp.discount();

    let mut v = vec![vec![0.0; n]; horizon + 1];
    let mut q = vec![vec![0.0; n * n_actions]; horizon];
    let mut probs = vec![vec![0.0; n * n_actions]; horizon];

    v[horizon].copy_from_slice(r);
    for t in (0..horizon).rev() {
        for s in 0..n {
            for a in 0..n_actions {
                let mut future = 0.0;
                for &(next, p) in mdp.next_states(s, a) {
                    future += p * v[t + 1][next];
                }
                q[t][s * n_actions + a] = r[s] + gamma * future;
            }
            let row = &q[t][s * n_actions..(s + 1) * n_actions];
            let vs = logsumexp(row);
            v[t][s] = vs;
            for a in 0..n_actions {
                probs[t][s * n_actions + a] = (q[t][s * n_actions + a] - vs).exp();
            }
        }
    }
    let policy = TabularPolicy::new(n, n_actions, probs)?;
    Ok((SoftValues { v, q }, policy))
}

/// Optimal-control backward recursion: max over actions, greedy ties by
/// lowest action index.
pub fn hard_value_iteration(mdp: &Mdp, reward: &RewardField) -> Result<HardSolution> {
    check_reward(mdp, reward)?;
    let (n, n_actions, horizon) = (mdp.n_states(), mdp.n_actions(), mdp.horizon());
    let r = reward.values();
    let gamma = mdp.discount();

    let mut v = vec![vec![0.0; n]; horizon + 1];
    let mut greedy = vec![vec![0usize; n]; horizon];
    v[horizon].copy_from_slice(r);
    for t in (0..horizon).rev() {
        for s in 0..n {
            let mut best = f64::NEG_INFINITY;
            let mut best_a = 0;
            for a in 0..n_actions {
                let mut future = 0.0;
                for &(next, p) in mdp.next_states(s, a) {
                    future += p * v[t + 1][next];
                }
                let qa = r[s] + gamma * future;
                if qa > best {
                    best = qa;
                    best_a = a;
                }
            }
            v[t][s] = best;
            greedy[t][s] = best_a;
        }
    }
    Ok(HardSolution { v, greedy })
}

/// Evaluates a fixed policy under `reward`: `V^pi_t(s)` for all `t`.
pub fn evaluate_policy(mdp: &Mdp, policy: &TabularPolicy, reward: &RewardField) -> Result<Vec<Vec<f64>>> {
    check_reward(mdp, reward)?;
    if policy.horizon() != mdp.horizon()
        || policy.n_states() != mdp.n_states()
        || policy.n_actions() != mdp.n_actions()
    {
        return reject("policy shape does not match mdp");
    }
    let (n, n_actions, horizon) = (mdp.n_states(), mdp.n_actions(), mdp.horizon());
    let r = reward.values();
    let gamma = mdp.discount();

    let mut v = vec![vec![0.0; n]; horizon + 1];
    v[horizon].copy_from_slice(r);
    for t in (0..horizon).rev() {
        for s in 0..n {
            let mut acc = 0.0;
            for a in 0..n_actions {
                let pa = policy.prob(t, s, a);
                if pa == 0.0 {
                    continue;
                }
                let mut future = 0.0;
                for &(next, p) in mdp.next_states(s, a) {
                    future += p * v[t + 1][next];
                }
                acc += pa * future;
            }
            v[t][s] = r[s] + gamma * acc;
        }
    }
    Ok(v)
}

/// Evaluates a deterministic (greedy) policy under `reward`.
pub fn evaluate_greedy(mdp: &Mdp, greedy: &[Vec<usize>], reward: &RewardField) -> Result<Vec<Vec<f64>>> {
    check_reward(mdp, reward)?;
    if greedy.len() != mdp.horizon() {
        return reject("greedy policy horizon does not match mdp");
    }
    let (n, horizon) = (mdp.n_states(), mdp.horizon());
    let r = reward.values();
    let gamma = mdp.discount();

    let mut v = vec![vec![0.0; n]; horizon + 1];
    v[horizon].copy_from_slice(r);
    for t in (0..horizon).rev() {
        for s in 0..n {
            let a = greedy[t][s];
            let mut future = 0.0;
            for &(next, p) in mdp.next_states(s, a) {
                future += p * v[t + 1][next];
            }
            v[t][s] = r[s] + gamma * future;
        }
    }
    Ok(v)
}
