//! Maximum-entropy deep inverse reinforcement learning: iteratively refine
//! a reward model until the soft-optimal agent's expected state visitation
//! matches the demonstrations' empirical visitation.

mod features;
mod model;
mod svf;
mod train;

pub use features::{apply_miscalibration, FeatureGrid, CHANNEL_NAMES};
pub use model::{ModelSnapshot, RewardModel};
pub use svf::{empirical_svf, expected_svf, DemoSet};
pub use train::{
    demo_nll, medirl_step, pretrain_from_handcrafted, train_medirl, DemoNll, MedirlStepMetrics,
    MedirlTrainConfig, TrainHistory, TrainRecord,
};
