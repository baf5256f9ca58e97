//! Central finite differences, the independent oracle every analytic
//! gradient in this crate is checked against.

use crate::error::{reject, Result};
use crate::nnet::dense::{DenseNet, Gradients, LayerGrads};
use crate::nnet::matrix::Matrix;

/// Central differences of `loss` over a flat parameter vector:
/// `(L(p + eps) - L(p - eps)) / (2 eps)` per coordinate.
pub fn finite_diff_flat<F>(mut loss: F, params: &[f64], eps: f64) -> Vec<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    assert!(eps > 0.0, "eps must be positive");
    let mut scratch = params.to_vec();
    let mut grads = Vec::with_capacity(params.len());
    for i in 0..params.len() {
        let orig = scratch[i];
        scratch[i] = orig + eps;
        let plus = loss(&scratch);
        scratch[i] = orig - eps;
        let minus = loss(&scratch);
        scratch[i] = orig;
        grads.push((plus - minus) / (2.0 * eps));
    }
    grads
}

/// Central differences of a scalar loss over every network parameter,
/// returned in the same shape as [`DenseNet::backward`] gradients.
pub fn finite_diff_grad<F>(mut loss: F, net: &DenseNet, eps: f64) -> Result<Gradients>
where
    F: FnMut(&DenseNet) -> f64,
{
    if !(eps > 0.0) {
        return reject(format!("eps must be positive, got {eps}"));
    }
    let params = net.flatten_params();
    let mut probe = net.clone();
    let flat = finite_diff_flat(
        |p| {
            probe.set_params(p);
            loss(&probe)
        },
        &params,
        eps,
    );
    // Re-pack into per-layer shapes.
    let mut layers = Vec::with_capacity(net.layers().len());
    let mut offset = 0;
    for l in net.layers() {
        let w_len = l.weight.data().len();
        let d_weight = Matrix::from_vec(
            l.weight.rows(),
            l.weight.cols(),
            flat[offset..offset + w_len].to_vec(),
        )?;
        offset += w_len;
        let d_bias = flat[offset..offset + l.bias.len()].to_vec();
        offset += l.bias.len();
        layers.push(LayerGrads { d_weight, d_bias });
    }
    Ok(Gradients { layers })
}

/// Gradient-check metric: `max_i |a_i - n_i| / max(|a_i|, |n_i|, 1)`.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    analytic
        .iter()
        .zip(numeric)
        .map(|(&a, &n)| (a - n).abs() / a.abs().max(n.abs()).max(1.0))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nnet::dense::Activation;
    use crate::rng::seed_rng;

    #[test]
    fn quadratic_derivative() {
        // L(p) = p^2 at p = 3 -> 6
        let g = finite_diff_flat(|p| p[0] * p[0], &[3.0], 1e-4);
        assert!((g[0] - 6.0).abs() < 1e-6);
    }

    #[test]
    fn constant_loss_gives_zeros() {
        let g = finite_diff_flat(|_| 42.0, &[1.0, 2.0, 3.0], 1e-4);
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rejects_nonpositive_eps() {
        let mut rng = seed_rng(0);
        let net = DenseNet::new(&[1, 1], Activation::Tanh, Activation::Identity, &mut rng);
        assert!(finite_diff_grad(|_| 0.0, &net, 0.0).is_err());
    }

    /// Both directions of the cross-check: backward against finite
    /// differences on a random two-layer net, squared-output loss.
    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = seed_rng(17);
        let net = DenseNet::new(&[3, 5, 2], Activation::Tanh, Activation::Identity, &mut rng);
        let x = Matrix::row_vector(&[0.4, -0.9, 0.2]).unwrap();

        // L = 0.5 * sum(output^2), so dL/d_out = output.
        let loss = |n: &DenseNet| {
            let out = n.forward(&x).unwrap().output().clone();
            0.5 * out.data().iter().map(|v| v * v).sum::<f64>()
        };
        let trace = net.forward(&x).unwrap();
        let d_out = trace.output().clone();
        let (analytic, _) = net.backward(&trace, &d_out).unwrap();
        let numeric = finite_diff_grad(loss, &net, 1e-5).unwrap();

        let err = max_relative_error(&analytic.flatten(), &numeric.flatten());
        assert!(err < 1e-5, "max relative error {err}");
    }
}
