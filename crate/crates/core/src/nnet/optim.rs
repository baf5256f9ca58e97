use serde::{Deserialize, Serialize};

use crate::error::{diverged, reject, Result};
use crate::nnet::dense::{DenseNet, Gradients};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimMethod {
    Sgd,
    Adam,
}

/// First-order optimizer over a flat parameter vector.
///
/// Adam moment buffers are sized lazily on the first step and must stay
/// shape-congruent afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimState {
    pub method: OptimMethod,
    pub learning_rate: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    step_count: u64,
}

impl OptimState {
    pub fn new(method: OptimMethod, learning_rate: f64) -> Result<Self> {
        if !(learning_rate > 0.0) || !learning_rate.is_finite() {
            return reject(format!("learning rate must be positive, got {learning_rate}"));
        }
        Ok(OptimState {
            method,
            learning_rate,
            m: Vec::new(),
            v: Vec::new(),
            step_count: 0,
        })
    }

    pub fn sgd(learning_rate: f64) -> Result<Self> {
        Self::new(OptimMethod::Sgd, learning_rate)
    }

    pub fn adam(learning_rate: f64) -> Result<Self> {
        Self::new(OptimMethod::Adam, learning_rate)
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    /// Applies one update in place. SGD: `p -= lr * g`. Adam: standard
    /// bias-corrected moment update with the module-level constants.
    pub fn step_flat(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        if params.len() != grads.len() {
            return reject(format!(
                "gradient length {} does not match parameter length {}",
                grads.len(),
                params.len()
            ));
        }
        if !grads.iter().all(|g| g.is_finite()) {
            return diverged("non-finite gradient");
        }
        match self.method {
            OptimMethod::Sgd => {
                for (p, g) in params.iter_mut().zip(grads) {
                    *p -= self.learning_rate * g;
                }
            }
            OptimMethod::Adam => {
                if self.m.is_empty() {
                    self.m = vec![0.0; params.len()];
                    self.v = vec![0.0; params.len()];
                }
                if self.m.len() != params.len() {
                    return reject("optimizer moments do not match parameter shape");
                }
                let t = (self.step_count + 1) as i32;
                let bc1 = 1.0 - ADAM_BETA1.powi(t);
                let bc2 = 1.0 - ADAM_BETA2.powi(t);
                for i in 0..params.len() {
                    self.m[i] = ADAM_BETA1 * self.m[i] + (1.0 - ADAM_BETA1) * grads[i];
                    self.v[i] = ADAM_BETA2 * self.v[i] + (1.0 - ADAM_BETA2) * grads[i] * grads[i];
                    let m_hat = self.m[i] / bc1;
                    let v_hat = self.v[i] / bc2;
                    params[i] -= self.learning_rate * m_hat / (v_hat.sqrt() + ADAM_EPS);
                }
            }
        }
        self.step_count += 1;
        Ok(())
    }
}

/// One optimizer step on a whole network.
pub fn optimizer_step(net: &mut DenseNet, grads: &Gradients, state: &mut OptimState) -> Result<()> {
    if grads.layers.len() != net.layers().len() {
        return reject("gradients do not match network depth");
    }
    let mut params = net.flatten_params();
    let flat = grads.flatten();
    if flat.len() != params.len() {
        return reject("gradients do not match network shape");
    }
    state.step_flat(&mut params, &flat)?;
    net.set_params(&params);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sgd_definition() {
        let mut s = OptimState::sgd(0.1).unwrap();
        let mut p = [1.0];
        s.step_flat(&mut p, &[2.0]).unwrap();
        assert!((p[0] - 0.8).abs() < 1e-15);
        assert_eq!(s.step_count(), 1);
    }

    #[test]
    fn zero_gradient_is_a_fixed_point() {
        for mut s in [OptimState::sgd(0.1).unwrap(), OptimState::adam(0.1).unwrap()] {
            let mut p = [3.0, -4.0];
            s.step_flat(&mut p, &[0.0, 0.0]).unwrap();
            assert_eq!(p, [3.0, -4.0]);
            assert_eq!(s.step_count(), 1);
        }
    }

    #[test]
    fn adam_first_step_is_bias_corrected() {
        // p = 0, g = 1, lr = 1e-3:
        //   m = 0.1, v = 0.001, m_hat = 1, v_hat = 1
        //   p = -lr * 1 / (1 + eps) = -1e-3 / (1 + 1e-8)
        let mut s = OptimState::adam(1e-3).unwrap();
        let mut p = [0.0];
        s.step_flat(&mut p, &[1.0]).unwrap();
        let expected = -1e-3 / (1.0 + ADAM_EPS);
        assert!((p[0] - expected).abs() < 1e-15, "p = {}", p[0]);
        assert!((p[0] + 1e-3).abs() < 1e-9);
    }

    #[test]
    fn non_finite_gradient_is_divergence() {
        let mut s = OptimState::sgd(0.1).unwrap();
        let mut p = [0.0];
        let err = s.step_flat(&mut p, &[f64::NAN]).unwrap_err();
        assert!(matches!(err, crate::Error::TrainingDiverged(_)));
    }

    #[test]
    fn rejects_nonpositive_learning_rate() {
        assert!(OptimState::sgd(0.0).is_err());
        assert!(OptimState::adam(-1.0).is_err());
    }
}
