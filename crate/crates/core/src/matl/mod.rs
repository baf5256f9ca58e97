//! Mutual Alignment Transfer Learning: parallel policy training in a
//! "sim" and a "real" gridworld with differing dynamics, coupled by a
//! state-occupancy discriminator whose confusion pays auxiliary rewards
//! into both systems. Includes the unilateral, no-transfer, and
//! fine-tuning baselines.

mod align;
mod env;
mod policy;
mod rollout;
mod train;

pub use align::{
    aux_reward, aux_rewards_for_batch, discriminator_accuracy, update_discriminator, AuxConfig,
    AuxMode, Domain,
};
pub use env::EnvPair;
pub use policy::{reinforce_update, SoftmaxPolicy};
pub use rollout::{collect_rollouts, StateBatch};
pub use train::{train_matl, MatlConfig, MatlHistory, MatlMode, MatlRecord};
