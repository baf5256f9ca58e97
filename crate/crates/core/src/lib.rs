//! Desk-scale building blocks for three supervision-efficiency experiments:
//!
//! - [`medirl`]: maximum-entropy deep inverse reinforcement learning on
//!   gridworld MDPs, with cost-map export through [`planner`].
//! - [`ada`]: adversarial domain adaptation (and its incremental variant)
//!   on synthetic drifting 2-D classification domains.
//! - [`matl`]: mutual-alignment transfer learning between a pair of
//!   dynamics-shifted gridworld environments.
//!
//! [`nnet`] provides the shared dense-network core (forward/backward,
//! gradient reversal, optimizers, finite-difference checking) and [`mdp`]
//! the exact finite-horizon dynamic-programming machinery everything else
//! is checked against.
//!
//! Every stochastic component draws from an injected [`rng::RunRng`];
//! given a seed, all outputs are byte-reproducible.

pub mod ada;
pub mod error;
pub mod matl;
pub mod mdp;
pub mod medirl;
pub mod nnet;
pub mod planner;
pub mod rng;

pub use error::{Error, Result};
