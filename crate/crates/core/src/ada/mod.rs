//! Adversarial domain adaptation with gradient reversal on synthetic
//! drifting 2-D classification domains, plus the incremental (IADA)
//! schedule that walks through an ordered stream of progressively
//! shifted targets.

mod domains;
mod model;
mod train;

pub use domains::{sample_domain, BaseShape, DomainSpec, LabelledBatch};
pub use model::{AdaModel, AdaSnapshot, N_CLASSES};
pub use train::{ada_step, train_ada, train_iada, AdaStepLosses, AdaTrainConfig, StageMetrics};
