//! Loss heads used by the trainers. Each returns the mean loss together
//! with the gradient of that mean with respect to its direct input, ready
//! to feed into [`DenseNet::backward`](crate::nnet::DenseNet::backward).

use crate::error::{reject, Result};
use crate::nnet::matrix::Matrix;

/// Floor applied inside logarithms of probabilities that were not already
/// clamped at the sigmoid.
pub const LOG_FLOOR: f64 = 1e-12;

/// Mean binary cross-entropy over an `n x 1` column of probabilities.
///
/// Probabilities are expected in `(0, 1)` (the sigmoid activation clamps
/// them there). Returns `(loss, d_probs)`.
pub fn bce_mean(probs: &Matrix, labels: &[f64]) -> Result<(f64, Matrix)> {
    if probs.cols() != 1 {
        return reject("bce expects an n x 1 probability column");
    }
    if probs.rows() != labels.len() {
        return reject("bce label count must match probability rows");
    }
    let n = labels.len() as f64;
    let mut loss = 0.0;
    let mut d = Matrix::zeros(probs.rows(), 1);
    for (i, (&y, p)) in labels.iter().zip(probs.data()).enumerate() {
        loss -= y * p.ln() + (1.0 - y) * (1.0 - p).ln();
        d.set(i, 0, (-y / p + (1.0 - y) / (1.0 - p)) / n);
    }
    Ok((loss / n, d))
}

/// Mean softmax cross-entropy over logit rows with integer class labels.
///
/// Returns `(loss, d_logits)`; the softmax is computed with max
/// subtraction.
pub fn softmax_ce_mean(logits: &Matrix, labels: &[usize]) -> Result<(f64, Matrix)> {
    if logits.rows() != labels.len() {
        return reject("label count must match logit rows");
    }
    let classes = logits.cols();
    if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
        return reject(format!("label {bad} out of range for {classes} classes"));
    }
    let n = labels.len() as f64;
    let mut loss = 0.0;
    let mut d = Matrix::zeros(logits.rows(), classes);
    for (i, &label) in labels.iter().enumerate() {
        let row = logits.row(i);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = row.iter().map(|&z| (z - max).exp()).collect();
        let sum: f64 = exps.iter().sum();
        loss -= (exps[label] / sum).max(LOG_FLOOR).ln();
        for c in 0..classes {
            let p = exps[c] / sum;
            let target = if c == label { 1.0 } else { 0.0 };
            d.set(i, c, (p - target) / n);
        }
    }
    Ok((loss / n, d))
}
