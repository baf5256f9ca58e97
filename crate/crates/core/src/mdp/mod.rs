//! Finite gridworld MDPs and exact finite-horizon dynamic programming:
//! hard and soft (maximum-entropy) value iteration, policy evaluation,
//! and trajectory sampling.
//!
//! [`GridWorld`] is the user-facing geometry; solvers operate on the
//! flattened [`Mdp`] form it compiles to, which also admits non-grid
//! fixtures in tests.

mod grid;
mod sample;
mod solve;
mod tabular;

pub use grid::{Action, GridWorld};
pub use sample::{sample_trajectory, Trajectory};
pub use solve::{
    evaluate_greedy, evaluate_policy, hard_value_iteration, soft_value_iteration, HardSolution,
    SoftValues, TabularPolicy,
};
pub use tabular::{Mdp, RewardField};
