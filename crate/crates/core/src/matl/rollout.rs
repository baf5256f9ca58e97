use crate::error::{reject, Result};
use crate::matl::policy::SoftmaxPolicy;
use crate::mdp::{sample_trajectory, GridWorld, Mdp, Trajectory};
use crate::nnet::Matrix;
use crate::rng::RunRng;

/// The states visited after each action across a batch of rollouts,
/// encoded for the discriminator as cell-centered normalized coordinates
/// `((x + 0.5) / width, (y + 0.5) / height)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateBatch {
    pub coords: Matrix,
    pub states: Vec<usize>,
}

/// Encodes one state.
pub fn encode_state(grid: &GridWorld, s: usize) -> [f64; 2] {
    let (x, y) = grid.coords(s);
    [
        (x as f64 + 0.5) / grid.width() as f64,
        (y as f64 + 0.5) / grid.height() as f64,
    ]
}

/// Collects `n` rollouts of the stationary policy and the batch of all
/// visited states at `t >= 1` (exactly `n * T` of them).
pub fn collect_rollouts(
    grid: &GridWorld,
    mdp: &Mdp,
    policy: &SoftmaxPolicy,
    n: usize,
    rng: &mut RunRng,
) -> Result<(Vec<Trajectory>, StateBatch)> {
    if n == 0 {
        return reject("need at least one rollout");
    }
    let tabular = policy.to_tabular(mdp.horizon());
    let mut trajectories = Vec::with_capacity(n);
    let mut states = Vec::with_capacity(n * mdp.horizon());
    let mut coords = Vec::with_capacity(n * mdp.horizon() * 2);
    for _ in 0..n {
        let traj = sample_trajectory(mdp, &tabular, rng)?;
        for &s in &traj.states[1..] {
            states.push(s);
            let [cx, cy] = encode_state(grid, s);
            coords.push(cx);
            coords.push(cy);
        }
        trajectories.push(traj);
    }
    let batch = StateBatch {
        coords: Matrix::from_vec(states.len(), 2, coords)?,
        states,
    };
    Ok((trajectories, batch))
}
