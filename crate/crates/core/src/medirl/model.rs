use serde::{Deserialize, Serialize};

use crate::error::{diverged, reject, Result};
use crate::medirl::features::FeatureGrid;
use crate::mdp::RewardField;
use crate::nnet::{Activation, DenseNet, Matrix, NetSnapshot};
use crate::rng::RunRng;

/// Maps per-state feature vectors to scalar rewards: either a linear
/// weighting of the channels or a small dense network.
#[derive(Debug, Clone, PartialEq)]
pub enum RewardModel {
    Linear { weights: Vec<f64> },
    Deep { net: DenseNet },
}

impl RewardModel {
    pub fn linear_zeros(dim: usize) -> Self {
        RewardModel::Linear {
            weights: vec![0.0; dim],
        }
    }

    /// Deep model with the given hidden widths (tanh) and a linear scalar
    /// output, e.g. `hidden = [32, 32]`.
    pub fn deep(input_dim: usize, hidden: &[usize], rng: &mut RunRng) -> Self {
        let mut dims = vec![input_dim];
        dims.extend_from_slice(hidden);
        dims.push(1);
        RewardModel::Deep {
            net: DenseNet::new(&dims, Activation::Tanh, Activation::Identity, rng),
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            RewardModel::Linear { weights } => weights.len(),
            RewardModel::Deep { net } => net.input_dim(),
        }
    }

    pub fn param_count(&self) -> usize {
        match self {
            RewardModel::Linear { weights } => weights.len(),
            RewardModel::Deep { net } => net.param_count(),
        }
    }

    pub fn params_flat(&self) -> Vec<f64> {
        match self {
            RewardModel::Linear { weights } => weights.clone(),
            RewardModel::Deep { net } => net.flatten_params(),
        }
    }

    pub fn set_params_flat(&mut self, flat: &[f64]) {
        match self {
            RewardModel::Linear { weights } => {
                assert_eq!(flat.len(), weights.len());
                weights.copy_from_slice(flat);
            }
            RewardModel::Deep { net } => net.set_params(flat),
        }
    }

    /// Evaluates the model on every state of the feature grid.
    pub fn reward(&self, features: &FeatureGrid) -> Result<RewardField> {
        if features.dim() != self.input_dim() {
            return reject(format!(
                "model expects {} channels, features have {}",
                self.input_dim(),
                features.dim()
            ));
        }
        let values: Vec<f64> = match self {
            RewardModel::Linear { weights } => (0..features.n_states())
                .map(|s| {
                    features
                        .row(s)
                        .iter()
                        .zip(weights)
                        .map(|(x, w)| x * w)
                        .sum()
                })
                .collect(),
            RewardModel::Deep { net } => {
                let trace = net.forward(&features.as_matrix())?;
                trace.output().data().to_vec()
            }
        };
        if !values.iter().all(|v| v.is_finite()) {
            return diverged("reward model produced non-finite output");
        }
        RewardField::new(values)
    }

    /// Gradient of `sum_s d_reward[s] * r_theta(s)` with respect to the
    /// flat parameters.
    pub fn backward(&self, features: &FeatureGrid, d_reward: &[f64]) -> Result<Vec<f64>> {
        if d_reward.len() != features.n_states() {
            return reject("d_reward length must equal state count");
        }
        match self {
            RewardModel::Linear { weights } => {
                let mut grad = vec![0.0; weights.len()];
                for (s, &g) in d_reward.iter().enumerate() {
                    if g == 0.0 {
                        continue;
                    }
                    for (gw, x) in grad.iter_mut().zip(features.row(s)) {
                        *gw += g * x;
                    }
                }
                Ok(grad)
            }
            RewardModel::Deep { net } => {
                let trace = net.forward(&features.as_matrix())?;
                let d_out = Matrix::from_vec(features.n_states(), 1, d_reward.to_vec())?;
                let (grads, _) = net.backward(&trace, &d_out)?;
                Ok(grads.flatten())
            }
        }
    }

    pub fn to_snapshot(&self) -> ModelSnapshot {
        match self {
            RewardModel::Linear { weights } => ModelSnapshot::Linear {
                weights: weights.clone(),
            },
            RewardModel::Deep { net } => ModelSnapshot::Deep {
                net: net.to_snapshot(),
            },
        }
    }

    pub fn from_snapshot(snap: &ModelSnapshot) -> Result<Self> {
        Ok(match snap {
            ModelSnapshot::Linear { weights } => RewardModel::Linear {
                weights: weights.clone(),
            },
            ModelSnapshot::Deep { net } => RewardModel::Deep {
                net: DenseNet::from_snapshot(net)?,
            },
        })
    }
}

/// Serializable reward-model parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelSnapshot {
    Linear { weights: Vec<f64> },
    Deep { net: NetSnapshot },
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nnet::finite_diff_flat;
    use crate::rng::seed_rng;

    #[test]
    fn linear_model_on_identity_features_reads_back_weights() {
        let f = FeatureGrid::identity(3);
        let model = RewardModel::Linear {
            weights: vec![0.5, -1.0, 2.0],
        };
        let r = model.reward(&f).unwrap();
        assert_eq!(r.values(), &[0.5, -1.0, 2.0]);
    }

    #[test]
    fn linear_backward_is_feature_weighted_sum() {
        let f = FeatureGrid::identity(3);
        let model = RewardModel::linear_zeros(3);
        let grad = model.backward(&f, &[-0.5, 0.5, 0.0]).unwrap();
        assert_eq!(grad, vec![-0.5, 0.5, 0.0]);
    }

    #[test]
    fn deep_backward_matches_finite_differences() {
        let mut rng = seed_rng(31);
        let grid = crate::mdp::GridWorld::open(3, 2, 4).with_terminals(&[(2, 1)]);
        let f = FeatureGrid::for_grid(&grid, &mut rng);
        let model = RewardModel::deep(4, &[6], &mut rng);
        let d_reward: Vec<f64> = (0..6).map(|i| ((i as f64) * 0.7).sin()).collect();

        let analytic = model.backward(&f, &d_reward).unwrap();
        let params = model.params_flat();
        let mut probe = model.clone();
        let numeric = finite_diff_flat(
            |p| {
                probe.set_params_flat(p);
                let r = probe.reward(&f).unwrap();
                r.values()
                    .iter()
                    .zip(&d_reward)
                    .map(|(v, g)| v * g)
                    .sum::<f64>()
            },
            &params,
            1e-5,
        );
        let err = crate::nnet::max_relative_error(&analytic, &numeric);
        assert!(err < 1e-6, "max relative error {err}");
    }
}
