use crate::error::{reject, Result};
use crate::mdp::{GridWorld, RewardField};

/// A sim/real pair: identical geometry, start distribution, horizon, and
/// task reward; only the dynamics (`p_slip`, `action_remap`) may differ.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvPair {
    pub sim: GridWorld,
    pub real: GridWorld,
    pub task_reward: RewardField,
}

impl EnvPair {
    pub fn new(sim: GridWorld, real: GridWorld, task_reward: RewardField) -> Result<Self> {
        sim.validate()?;
        real.validate()?;
        if sim.width() != real.width() || sim.height() != real.height() {
            return reject("sim and real grids must share geometry");
        }
        if sim.obstacle_mask() != real.obstacle_mask()
            || sim.terminal_mask() != real.terminal_mask()
        {
            return reject("sim and real grids must share obstacles and terminals");
        }
        if sim.horizon() != real.horizon() || sim.discount() != real.discount() {
            return reject("sim and real grids must share horizon and discount");
        }
        if sim.start_dist() != real.start_dist() {
            return reject("sim and real grids must share the start distribution");
        }
        if task_reward.len() != sim.n_states() {
            return reject("task reward length must equal state count");
        }
        Ok(EnvPair {
            sim,
            real,
            task_reward,
        })
    }
}
