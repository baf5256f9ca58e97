use crate::error::{reject, Result};
use crate::mdp::{Mdp, TabularPolicy, Trajectory};

/// A set of demonstration trajectories with a provenance tag.
#[derive(Debug, Clone, PartialEq)]
pub struct DemoSet {
    pub trajectories: Vec<Trajectory>,
    pub provenance: String,
}

impl DemoSet {
    pub fn new(trajectories: Vec<Trajectory>, provenance: impl Into<String>) -> Self {
        DemoSet {
            trajectories,
            provenance: provenance.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    pub fn validate(&self, mdp: &Mdp) -> Result<()> {
        for traj in &self.trajectories {
            traj.validate(mdp)?;
        }
        Ok(())
    }

    /// Empirical distribution of demo start states.
    pub fn start_distribution(&self, n_states: usize) -> Result<Vec<f64>> {
        if self.is_empty() {
            return reject("demo set is empty");
        }
        let mut dist = vec![0.0; n_states];
        for traj in &self.trajectories {
            dist[traj.states[0]] += 1.0;
        }
        let n = self.len() as f64;
        for p in &mut dist {
            *p /= n;
        }
        Ok(dist)
    }
}

/// Empirical state visitation frequency: mean over trajectories of the
/// number of timesteps `t in [0, T]` spent in each state. Sums to `T + 1`.
pub fn empirical_svf(demos: &DemoSet, n_states: usize) -> Result<Vec<f64>> {
    if demos.is_empty() {
        return reject("demo set is empty");
    }
    let mut counts = vec![0u64; n_states];
    for traj in &demos.trajectories {
        for &s in &traj.states {
            if s >= n_states {
                return reject(format!("trajectory visits state {s} out of range"));
            }
            counts[s] += 1;
        }
    }
    let m = demos.len() as f64;
    Ok(counts.iter().map(|&c| c as f64 / m).collect())
}

/// Expected state visitation frequency of a policy under the MDP's start
/// distribution: `d_0 = start_dist`,
/// `d_{t+1}(s') = sum_s sum_a d_t(s) pi_t(a|s) P(s'|s,a)`,
/// `mu = sum_{t=0}^{T} d_t`.
pub fn expected_svf(mdp: &Mdp, policy: &TabularPolicy) -> Result<Vec<f64>> {
    expected_svf_from(mdp, policy, mdp.start_dist())
}

/// [`expected_svf`] with an explicit initial state distribution.
pub fn expected_svf_from(mdp: &Mdp, policy: &TabularPolicy, d0: &[f64]) -> Result<Vec<f64>> {
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
    if d0.len() != mdp.n_states() {
        return reject("initial distribution length must equal state count");
    }
    let n = mdp.n_states();
    let mut d = d0.to_vec();
    let mut mu = d.clone();
    for t in 0..mdp.horizon() {
        let mut next = vec![0.0; n];
        for s in 0..n {
            let mass = d[s];
            if mass == 0.0 {
                continue;
            }
            for a in 0..mdp.n_actions() {
                let pa = policy.prob(t, s, a);
                if pa == 0.0 {
                    continue;
                }
                for &(sn, p) in mdp.next_states(s, a) {
                    next[sn] += mass * pa * p;
                }
            }
        }
        for s in 0..n {
            mu[s] += next[s];
        }
        d = next;
    }
    Ok(mu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{GridWorld, TabularPolicy, Trajectory};

    #[test]
    fn empirical_svf_counts_single_trajectory() {
        // One trajectory A -> B with T = 1.
        let demos = DemoSet::new(
            vec![Trajectory {
                states: vec![0, 1],
                actions: vec![1],
            }],
            "test",
        );
        let mu = empirical_svf(&demos, 3).unwrap();
        assert_eq!(mu, vec![1.0, 1.0, 0.0]);
    }

    #[test]
    fn duplicated_trajectories_leave_mean_unchanged() {
        let traj = Trajectory {
            states: vec![0, 1, 1],
            actions: vec![1, 0],
        };
        let one = DemoSet::new(vec![traj.clone()], "test");
        let two = DemoSet::new(vec![traj.clone(), traj], "test");
        assert_eq!(empirical_svf(&one, 2).unwrap(), empirical_svf(&two, 2).unwrap());
    }

    #[test]
    fn empirical_svf_hand_tally_on_3x3() {
        // Three hand-written trajectories on a 3x3 grid (indices 0..9), T = 2.
        let demos = DemoSet::new(
            vec![
                Trajectory {
                    states: vec![0, 1, 2],
                    actions: vec![2, 2],
                },
                Trajectory {
                    states: vec![0, 3, 6],
                    actions: vec![1, 1],
                },
                Trajectory {
                    states: vec![4, 4, 4],
                    actions: vec![4, 4],
                },
            ],
            "test",
        );
        let mu = empirical_svf(&demos, 9).unwrap();
        // Hand tally: state 0 twice, 1/2/3/6 once, 4 three times, over 3 demos.
        let expected = [
            2.0 / 3.0,
            1.0 / 3.0,
            1.0 / 3.0,
            1.0 / 3.0,
            1.0,
            0.0,
            1.0 / 3.0,
            0.0,
            0.0,
        ];
        for (a, b) in mu.iter().zip(expected.iter()) {
            assert!((a - b).abs() < 1e-15);
        }
        let total: f64 = mu.iter().sum();
        assert_eq!(total, 3.0); // T + 1 exactly (counts divide evenly here)
    }

    #[test]
    fn empty_demo_set_is_rejected() {
        let demos = DemoSet::new(vec![], "test");
        assert!(empirical_svf(&demos, 4).is_err());
    }

    #[test]
    fn expected_svf_base_case_is_start_dist() {
        let grid = GridWorld::open(2, 2, 0).with_start_cells(&[(0, 0), (1, 1)]);
        let mdp = grid.to_mdp().unwrap();
        let policy = TabularPolicy::uniform(4, 5, 0);
        let mu = expected_svf(&mdp, &policy).unwrap();
        assert_eq!(mu, vec![0.5, 0.0, 0.0, 0.5]);
    }

    #[test]
    fn deterministic_policy_on_deterministic_grid_is_path_indicator() {
        let grid = GridWorld::open(3, 1, 2);
        let mdp = grid.to_mdp().unwrap();
        let mut table = vec![0.0; 3 * 5];
        for s in 0..3 {
            table[s * 5 + 2] = 1.0; // east
        }
        let policy = TabularPolicy::stationary(3, 5, table, 2).unwrap();
        let mu = expected_svf(&mdp, &policy).unwrap();
        assert_eq!(mu, vec![1.0, 1.0, 1.0]);
    }

    /// Enumerates visitation frequencies by expanding every (action,
    /// outcome) branch with its probability; exact for small instances.
    fn enumerate_svf(mdp: &Mdp, policy: &TabularPolicy) -> Vec<f64> {
        fn recurse(
            mdp: &Mdp,
            policy: &TabularPolicy,
            t: usize,
            s: usize,
            mass: f64,
            mu: &mut [f64],
        ) {
            mu[s] += mass;
            if t == mdp.horizon() {
                return;
            }
            for a in 0..mdp.n_actions() {
                let pa = policy.prob(t, s, a);
                if pa == 0.0 {
                    continue;
                }
                for &(next, p) in mdp.next_states(s, a) {
                    recurse(mdp, policy, t + 1, next, mass * pa * p, mu);
                }
            }
        }
        let mut mu = vec![0.0; mdp.n_states()];
        for s in 0..mdp.n_states() {
            let p0 = mdp.start_dist()[s];
            if p0 > 0.0 {
                recurse(mdp, policy, 0, s, p0, &mut mu);
            }
        }
        mu
    }

    #[test]
    fn expected_svf_matches_enumeration_on_3x3_uniform() {
        for p_slip in [0.0, 0.2] {
            let grid = GridWorld::open(3, 3, 4)
                .with_p_slip(p_slip)
                .with_start_cells(&[(0, 0)]);
            let mdp = grid.to_mdp().unwrap();
            let policy = TabularPolicy::uniform(9, 5, 4);
            let mu = expected_svf(&mdp, &policy).unwrap();
            let brute = enumerate_svf(&mdp, &policy);
            for (a, b) in mu.iter().zip(brute.iter()) {
                assert!((a - b).abs() < 1e-10, "{a} vs {b} (p_slip {p_slip})");
            }
            let total: f64 = mu.iter().sum();
            assert!((total - 5.0).abs() < 1e-10); // T + 1
        }
    }
}
